# Handlers package initialization