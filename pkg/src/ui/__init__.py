# Path: /src/ui/__init__.py
