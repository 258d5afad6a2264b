//! Mean ± standard deviation curves of the two midsole foams (n = 5 samples
//! per test). Compression stresses are stored with their physical sign.

use super::{Curve, FoamDataset};
use crate::error::{Error, Result};

const TENSION_STRETCH: [f64; 13] = [
    1.000, 1.025, 1.050, 1.075, 1.100, 1.125, 1.150, 1.175, 1.200, 1.225, 1.250, 1.275, 1.300,
];
const COMPRESSION_STRETCH: [f64; 13] = [
    1.000, 0.950, 0.900, 0.850, 0.800, 0.750, 0.700, 0.650, 0.600, 0.550, 0.500, 0.450, 0.400,
];
const SHEAR_STRAIN: [f64; 13] = [
    0.000, 0.012, 0.025, 0.037, 0.050, 0.062, 0.075, 0.087, 0.100, 0.112, 0.125, 0.137, 0.150,
];

struct Table {
    tension: [(f64, f64); 13],
    /// magnitudes, negated on load
    compression: [(f64, f64); 13],
    shear: [(f64, f64); 13],
}

const LEAP: Table = Table {
    tension: [
        (0.00, 0.00),
        (13.71, 2.15),
        (29.76, 4.50),
        (46.83, 7.19),
        (65.35, 10.34),
        (85.64, 13.94),
        (107.77, 17.66),
        (131.58, 21.25),
        (157.34, 24.86),
        (185.70, 28.77),
        (217.85, 33.26),
        (255.28, 38.67),
        (298.59, 45.29),
    ],
    compression: [
        (0.00, 0.00),
        (12.79, 1.24),
        (32.65, 3.98),
        (45.64, 5.47),
        (55.37, 5.84),
        (65.47, 6.08),
        (77.17, 6.33),
        (91.21, 6.69),
        (108.06, 6.98),
        (129.08, 7.59),
        (156.19, 8.50),
        (191.67, 10.09),
        (241.60, 13.73),
    ],
    shear: [
        (0.09, 0.02),
        (1.42, 0.28),
        (2.85, 0.56),
        (4.29, 0.85),
        (5.75, 1.14),
        (7.24, 1.45),
        (8.76, 1.77),
        (10.34, 2.11),
        (11.97, 2.46),
        (13.67, 2.84),
        (15.43, 3.23),
        (17.29, 3.67),
        (19.14, 4.12),
    ],
};

const TURBO: Table = Table {
    tension: [
        (0.00, 0.00),
        (19.45, 1.64),
        (41.89, 3.31),
        (66.29, 5.12),
        (93.27, 7.29),
        (123.76, 9.81),
        (157.97, 12.40),
        (195.56, 14.99),
        (236.36, 18.01),
        (281.58, 21.73),
        (333.96, 25.42),
        (395.95, 29.71),
        (469.95, 34.89),
    ],
    compression: [
        (0.00, 0.00),
        (9.41, 1.08),
        (32.75, 1.96),
        (51.40, 4.41),
        (64.33, 5.62),
        (76.82, 6.22),
        (90.92, 6.66),
        (107.86, 7.34),
        (128.72, 8.32),
        (155.11, 9.66),
        (189.78, 11.63),
        (236.96, 14.90),
        (305.43, 19.56),
    ],
    shear: [
        (0.16, 0.02),
        (2.66, 0.26),
        (5.33, 0.52),
        (8.03, 0.77),
        (10.76, 1.03),
        (13.54, 1.28),
        (16.39, 1.53),
        (19.33, 1.77),
        (22.35, 2.02),
        (25.47, 2.27),
        (28.69, 2.50),
        (32.03, 2.76),
        (35.41, 2.99),
    ],
};

/// Names accepted by [`builtin_dataset`].
pub const BUILTIN_NAMES: [&str; 2] = ["leap", "turbo"];

fn curve(x: &[f64; 13], rows: &[(f64, f64); 13], sign: f64) -> Curve {
    let y = rows.iter().map(|r| sign * r.0).collect();
    let std = rows.iter().map(|r| r.1).collect();
    Curve::with_std(x.to_vec(), y, std).expect("built-in table is well formed")
}

pub fn builtin_dataset(name: &str) -> Result<FoamDataset> {
    let (table, label) = match name.trim().to_ascii_lowercase().as_str() {
        "leap" => (&LEAP, "leap"),
        "turbo" => (&TURBO, "turbo"),
        other => return Err(Error::UnknownDataset(other.to_string())),
    };
    Ok(FoamDataset {
        label: label.to_string(),
        tension: curve(&TENSION_STRETCH, &table.tension, 1.0),
        compression: curve(&COMPRESSION_STRETCH, &table.compression, -1.0),
        shear: curve(&SHEAR_STRAIN, &table.shear, 1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_values() {
        let leap = builtin_dataset("leap").unwrap();
        assert_eq!(leap.tension.x[12], 1.3);
        assert_eq!(leap.tension.y[12], 298.59);
        assert_eq!(leap.tension.y_std.as_ref().unwrap()[12], 45.29);
        assert_eq!(leap.shear.x[12], 0.15);
        assert_eq!(leap.shear.y[12], 19.14);
        assert_eq!(leap.shear.y_std.as_ref().unwrap()[12], 4.12);

        let turbo = builtin_dataset("turbo").unwrap();
        assert_eq!(turbo.compression.x[12], 0.4);
        assert_eq!(turbo.compression.y[12], -305.43);
    }

    #[test]
    fn ranges() {
        for name in BUILTIN_NAMES {
            let d = builtin_dataset(name).unwrap();
            assert_eq!(d.tension.len(), 13);
            assert_eq!(d.compression.len(), 13);
            assert_eq!(d.shear.len(), 13);
            assert!(d.tension.x.iter().all(|&x| (1.0..=1.3).contains(&x)));
            assert!(d.compression.x.iter().all(|&x| (0.4..=1.0).contains(&x)));
            assert!(d.shear.x.iter().all(|&x| (0.0..=0.15).contains(&x)));
            assert!(d.compression.y.iter().all(|&y| y <= 0.0));
        }
    }

    #[test]
    fn unknown_name() {
        assert!(matches!(
            builtin_dataset("boost"),
            Err(Error::UnknownDataset(_))
        ));
    }
}
