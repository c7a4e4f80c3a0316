/** Orbit camera: azimuth/elevation/distance around the volume center. */
export const DEFAULT_ORBIT = {
    azimuthDeg: 45,
    elevationDeg: 30,
    distance: 2.6,
};
export function orbitToCamera(orbit, dims, size, spacing = [1, 1, 1], origin = [0, 0, 0]) {
    const extent = dims.map((n, i) => (n - 1) * spacing[i]);
    const center = [
        origin[0] + extent[0] / 2,
        origin[1] + extent[1] / 2,
        origin[2] + extent[2] / 2,
    ];
    const radius = Math.hypot(...extent) / 2;
    const az = (orbit.azimuthDeg * Math.PI) / 180;
    // clamp so the view direction never aligns with the +z up vector
    const elClamped = Math.min(89, Math.max(-89, orbit.elevationDeg));
    const el = (elClamped * Math.PI) / 180;
    const r = Math.max(0.1, orbit.distance) * radius;
    const eye = [
        center[0] + r * Math.cos(el) * Math.cos(az),
        center[1] + r * Math.cos(el) * Math.sin(az),
        center[2] + r * Math.sin(el),
    ];
    return {
        eye,
        look_at: center,
        up: [0, 0, 1],
        fov_deg: 45,
        width: size,
        height: size,
    };
}
