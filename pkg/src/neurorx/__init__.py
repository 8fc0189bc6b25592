"""Link-level OFDM uplink simulator with classical and neural LLR receivers."""

__version__ = "0.1.0"
