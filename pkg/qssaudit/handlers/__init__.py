"""Command handlers and the error handler."""
