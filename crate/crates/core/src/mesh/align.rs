use super::{MeshError, SurfaceMesh};
use crate::geom::Vec3;

/// Area-weighted centroid of the surface (mean of face barycenters weighted
/// by face area).
pub fn area_centroid(mesh: &SurfaceMesh) -> Result<Vec3, MeshError> {
    if mesh.face_count() == 0 {
        return Err(MeshError::Empty);
    }
    let mut weighted = Vec3::zeros();
    let mut total = 0.0;
    for m in 0..mesh.face_count() {
        let [a, b, c] = mesh.triangle(m);
        let area = 0.5 * (b - a).cross(&(c - a)).norm();
        weighted += area * (a + b + c) / 3.0;
        total += area;
    }
    Ok(weighted / total)
}

/// Rigidly translates `moving` so its area-weighted centroid coincides with
/// that of `target`. Returns the moved mesh and the translation applied.
pub fn translate_align(
    moving: &SurfaceMesh,
    target: &SurfaceMesh,
) -> Result<(SurfaceMesh, Vec3), MeshError> {
    let t = area_centroid(target)? - area_centroid(moving)?;
    Ok((moving.translated(&t), t))
}
