# CLI commands