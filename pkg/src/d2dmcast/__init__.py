"""Energy-minimal content delivery over multicast multihop D2D groups."""

__version__ = "0.1.0"
