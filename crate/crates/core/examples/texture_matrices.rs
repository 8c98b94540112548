//! Builds each texture matrix of a tiny hand-written ROI and prints its
//! features.

use radshift::radiomics::{build_matrix, texture_features, DiscretizedRoi, TextureKind};

fn main() {
    // 3 x 3 x 2 volume, levels 1..=3, zero marks voxels outside the ROI.
    #[rustfmt::skip]
    let levels = vec![
        1, 1, 2,
        1, 2, 3,
        0, 3, 3,

        2, 2, 2,
        1, 3, 3,
        0, 0, 3,
    ];
    let roi = DiscretizedRoi::from_levels([3, 3, 2], [1.0; 3], levels, 3);
    let n = roi.voxels().count();
    for kind in [TextureKind::Glcm, TextureKind::Glrlm, TextureKind::Glszm, TextureKind::Gldm, TextureKind::Ngtdm] {
        let m = build_matrix(kind, &roi);
        let f: Vec<String> = texture_features(&m, n).iter().map(|v| format!("{v:.4}")).collect();
        println!("{kind:?} ({} features): {}", f.len(), f.join(" "));
    }
}
