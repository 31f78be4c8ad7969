use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;

/// Run settings shared by every subcommand. Each field can come from the
/// command line or from the `--config` JSON file; the command line wins.
#[derive(Args, Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// JSON file holding any of these settings.
    #[arg(long, value_name = "PATH")]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Input matrix (headerless CSV, or JSON `{rows, cols, data}`).
    #[arg(long, value_name = "PATH")]
    pub data: Option<PathBuf>,

    /// Dataset tag written to reports; defaults to the input file stem.
    #[arg(long)]
    pub dataset: Option<String>,

    /// Ids sidecar whose item ids label per-item CSV rows.
    #[arg(long, value_name = "PATH")]
    pub ids: Option<PathBuf>,

    /// vanilla, colnorm or iwpca.
    #[arg(long)]
    pub algorithm: Option<String>,

    /// Comma-separated algorithms for sweeps.
    #[arg(long, value_delimiter = ',')]
    pub algorithms: Option<Vec<String>>,

    /// uniform, inverse_sign_norm, proper, interpolate, interpolate_text,
    /// inverse_count or custom.
    #[arg(long = "weights")]
    #[serde(alias = "weights")]
    pub weight_scheme: Option<String>,

    /// JSON array of per-item weights for the custom scheme.
    #[arg(long, value_name = "PATH")]
    pub weights_file: Option<PathBuf>,

    /// Number of most popular items forming the popular block.
    #[arg(long)]
    pub popular_top: Option<usize>,

    /// Users per popular item; defaults to the popular block's mean.
    #[arg(long)]
    pub n_p: Option<f64>,

    /// Users per unpopular item; defaults to the unpopular block's mean.
    #[arg(long)]
    pub n_u: Option<f64>,

    #[arg(long)]
    pub rank: Option<usize>,

    #[arg(long, value_delimiter = ',')]
    pub ranks: Option<Vec<usize>>,

    /// Removal fractions for robustness sweeps.
    #[arg(long, value_delimiter = ',')]
    pub alphas: Option<Vec<f64>>,

    /// Reconstruction-error slack for constrained Item-Weighted PCA.
    #[arg(long)]
    pub error_slack: Option<f64>,

    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long, value_name = "DIR")]
    pub output_dir: Option<PathBuf>,

    /// Popularity groups for diagnostics.
    #[arg(long)]
    pub groups: Option<usize>,

    /// Emit one CSV row per item in addition to the mean.
    #[arg(long)]
    pub per_item: Option<bool>,

    /// Include components-to-half-error per item in eval diagnostics.
    #[arg(long)]
    pub half_error: Option<bool>,

    /// Treat all-zero columns as unit norm in column-normalized PCA.
    #[arg(long)]
    pub keep_zero_cols: Option<bool>,

    /// Existing projection JSON to evaluate instead of fitting.
    #[arg(long, value_name = "PATH")]
    pub projection: Option<PathBuf>,
}

macro_rules! overlay {
    ($cli:ident, $file:ident, $($field:ident),+) => {
        RunConfig {
            config: None,
            $($field: $cli.$field.or($file.$field),)+
        }
    };
}

impl RunConfig {
    /// Fills unset fields from the `--config` file when one is given.
    pub fn resolve(self) -> Result<Self, String> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let text =
            std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        let file: RunConfig =
            serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        let cli = self;
        Ok(overlay!(
            cli,
            file,
            data,
            dataset,
            ids,
            algorithm,
            algorithms,
            weight_scheme,
            weights_file,
            popular_top,
            n_p,
            n_u,
            rank,
            ranks,
            alphas,
            error_slack,
            seed,
            output_dir,
            groups,
            per_item,
            half_error,
            keep_zero_cols,
            projection
        ))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn data_path(&self) -> Result<&Path, String> {
        self.data
            .as_deref()
            .ok_or_else(|| "missing --data".to_string())
    }

    pub fn dataset_tag(&self) -> String {
        self.dataset.clone().unwrap_or_else(|| {
            self.data
                .as_deref()
                .and_then(Path::file_stem)
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default()
        })
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("iwpca-out"))
    }
}
