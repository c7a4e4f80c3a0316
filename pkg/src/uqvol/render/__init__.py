"""Volume renderer: transfer functions, cameras, and the ray caster."""

from .camera import Camera, default_camera_for
from .image import RGBImage
from .raycast import active_backend, raycast, render_stack
from .transfer import TransferFunction, grayscale_ramp

__all__ = [
    "Camera",
    "RGBImage",
    "TransferFunction",
    "active_backend",
    "default_camera_for",
    "grayscale_ramp",
    "raycast",
    "render_stack",
]
