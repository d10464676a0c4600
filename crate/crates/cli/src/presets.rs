//! Built-in experiment configurations.

macro_rules! presets {
    ($($name:literal),* $(,)?) => {
        pub const NAMES: &[&str] = &[$($name),*];

        pub fn get(name: &str) -> Option<&'static str> {
            match name {
                $($name => Some(include_str!(concat!("../presets/", $name, ".toml"))),)*
                _ => None,
            }
        }
    };
}

presets!(
    "fig1_single_well",
    "fig1_quartic",
    "fig3_double_well",
    "fig4_three_wire",
    "fig5_tabulated_2d",
    "fig6_nonlinear_map",
    "nonlinear_map",
    "single_well_T9_linear",
    "spatial_channel",
    "sweep_single_well",
    "wigner_double_well",
);
