//! Panel files and result tables.

mod panel;
mod results;

pub use panel::{load_panel, read_long, read_stacked, save_panel, sort_ids, write_panel, IdMaps, Panel, PanelFormat};
pub use results::{factors_table, loadings_table, read_loadings, rolling_table, Table};

/// 17 significant digits, which round-trips every finite `f64`.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formatted_floats_parse_back_exactly() {
        for v in [0.1, -1.0 / 3.0, 1e-320, f64::MAX, 123456789.0, 0.0] {
            assert_eq!(format_float(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(format_float(f64::INFINITY).parse::<f64>().unwrap(), f64::INFINITY);
    }
}
