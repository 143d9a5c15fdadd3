"""Command-line entry points: mhc (compiler) and hgdbg (debugger client)."""
