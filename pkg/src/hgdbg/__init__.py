"""Source-level debugging for generated hardware.

The package compiles a small behavioral HDL to a flat SSA netlist while
emitting a relational symbol table, then emulates source-level breakpoints on
top of cycle simulation or VCD trace replay, exposed over a WebSocket debug
protocol.
"""

__version__ = "0.1.0"
