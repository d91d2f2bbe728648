//! Dataset persistence, Fresnel ingestion and result export.

pub mod container;
pub mod export;
pub mod fresnel;

pub use container::{load_dataset, save_dataset, Dataset, DatasetHeader, DatasetKind, GenerationInfo, DATASET_SCHEMA};
pub use export::{
    export_ensemble, export_run, read_boxplot_csv, read_mean_curve_csv, read_psnr_csv, render_boxplots, render_curves,
    render_map, write_boxplot_csv, write_loss_csv, write_mean_curve_csv, write_png, write_psnr_csv, BoxplotRow,
    ColorRange, MeanCurve, PsnrSeries, RenderSettings,
};
pub use fresnel::{
    calibrate, foam_twin_diel_reference, parse_fresnel, parse_fresnel_str, subsample_and_split, write_fresnel,
    Calibration, FresnelStructure, RawFresnelRecord, FOAM_TWIN_DIEL, FRESNEL_RADIUS,
};
