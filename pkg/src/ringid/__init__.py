"""Ring-key watermarking of diffusion-style latents."""

__version__ = "0.1.0"
