# Services package initialization