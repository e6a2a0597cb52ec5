"""
risbeam - Joint active/passive beamforming for RIS-assisted multiuser MISO
downlinks with a quantization-aware neural network
"""
__version__ = "0.1.0"
