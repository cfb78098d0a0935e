//! Run configuration: a flat `key = value` text format.
//!
//! Lines are `key = value`; blank lines are skipped; `#` starts a comment when
//! it opens the line or follows whitespace (so `idx:runs/a#1` stays a path).
//! Every key has a default, so the empty file is a valid config; unknown keys
//! are errors, as are malformed values. The same `key=value` syntax backs the
//! CLI `--set` override flag.
//!
//! [`RunConfig::to_canonical_string`] serializes every key in a fixed order
//! with `Display`-formatted numbers (shortest round-tripping decimal), so the
//! resolved config written next to run outputs is byte-reproducible.

use crate::error::LabError;
use lumix_core::lumix::{LambdaRDist, LossKind, LumixConfig, MaskMode};
use lumix_core::mixing::{Lambda0Dist, MixMode};
use lumix_core::nn::ModelKind;
use std::fmt::Write as _;
use std::path::Path;

/// Which dataset the run trains on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DataKind {
    Collage,
    Blobs,
    /// Load from a directory of idx files (see the `idx` module layout).
    Idx(String),
}

/// Input-mixing family applied during training.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AugMode {
    None,
    Mixup,
    Cutmix,
    /// Per-batch fair coin between mixup and cutmix.
    MixupCutmix,
    CutmixShuffle,
    PerPatchLambda,
}

impl AugMode {
    fn name(self) -> &'static str {
        match self {
            AugMode::None => "none",
            AugMode::Mixup => "mixup",
            AugMode::Cutmix => "cutmix",
            AugMode::MixupCutmix => "mixup_cutmix",
            AugMode::CutmixShuffle => "cutmix_shuffle",
            AugMode::PerPatchLambda => "per_patch_lambda",
        }
    }
}

/// How the batch-shared lambda0 is drawn (the alpha lives in `alpha0`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lambda0Kind {
    Beta,
    Uniform,
}

/// The complete, flat configuration of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub data_kind: DataKind,
    pub train_n: usize,
    pub test_n: usize,
    pub classes: usize,
    pub height: usize,
    pub width: usize,
    pub object_min_frac: f64,
    pub object_max_frac: f64,
    pub clutter: f64,
    pub blob_dim: usize,
    pub blob_separation: f64,
    pub model: ModelKind,
    pub lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Epochs of linear learning-rate ramp; 0 disables warmup.
    pub warmup_epochs: usize,
    pub aug_mode: AugMode,
    /// When true, mixed batches are scored by the label-uncertainty loss;
    /// when false, by the plain mixed soft loss at lambda0.
    pub use_lumix: bool,
    pub shuffle_grid: usize,
    pub patch_grid: usize,
    pub lambda0_kind: Lambda0Kind,
    pub alpha0: f64,
    pub lumix: LumixConfig,
    /// Size cap of the fixed training subset used for the per-epoch clean
    /// metrics pass.
    pub metrics_subset: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            data_kind: DataKind::Collage,
            train_n: 10_000,
            test_n: 2_000,
            classes: 4,
            height: 32,
            width: 32,
            object_min_frac: 0.1,
            object_max_frac: 0.4,
            clutter: 0.35,
            blob_dim: 16,
            blob_separation: 10.0,
            model: ModelKind::Conv,
            lr: 0.05,
            momentum: 0.9,
            weight_decay: 1e-4,
            epochs: 30,
            batch_size: 64,
            warmup_epochs: 0,
            aug_mode: AugMode::Cutmix,
            use_lumix: true,
            shuffle_grid: 4,
            patch_grid: 4,
            lambda0_kind: Lambda0Kind::Beta,
            alpha0: 0.8,
            lumix: LumixConfig::default(),
            metrics_subset: 2_000,
        }
    }
}

fn bad(key: &str, value: &str, expected: &str) -> LabError {
    LabError::Config(format!("bad value for {key}: got `{value}`, expected {expected}"))
}

fn p_u64(key: &str, v: &str) -> Result<u64, LabError> {
    v.parse().map_err(|_| bad(key, v, "an unsigned integer"))
}

fn p_usize(key: &str, v: &str) -> Result<usize, LabError> {
    v.parse().map_err(|_| bad(key, v, "an unsigned integer"))
}

fn p_f64(key: &str, v: &str) -> Result<f64, LabError> {
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(bad(key, v, "a finite number")),
    }
}

fn p_bool(key: &str, v: &str) -> Result<bool, LabError> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(bad(key, v, "true or false")),
    }
}

fn fmt_lambda_r(d: LambdaRDist) -> String {
    match d {
        LambdaRDist::Beta(a) => format!("beta:{a}"),
        LambdaRDist::Gaussian { mu, sigma } => format!("gaussian:{mu},{sigma}"),
        LambdaRDist::None => "none".into(),
    }
}

fn parse_lambda_r(key: &str, v: &str) -> Result<LambdaRDist, LabError> {
    if v == "none" {
        return Ok(LambdaRDist::None);
    }
    if let Some(a) = v.strip_prefix("beta:") {
        return Ok(LambdaRDist::Beta(p_f64(key, a)?));
    }
    if let Some(rest) = v.strip_prefix("gaussian:") {
        let (mu, sigma) = rest
            .split_once(',')
            .ok_or_else(|| bad(key, v, "gaussian:<mu>,<sigma>"))?;
        return Ok(LambdaRDist::Gaussian { mu: p_f64(key, mu)?, sigma: p_f64(key, sigma)? });
    }
    Err(bad(key, v, "beta:<alpha>, gaussian:<mu>,<sigma>, or none"))
}

impl RunConfig {
    /// Applies one `key = value` pair. Unknown keys and bad values are errors.
    pub fn apply_kv(&mut self, key: &str, value: &str) -> Result<(), LabError> {
        match key {
            "seed" => self.seed = p_u64(key, value)?,
            "data.kind" => {
                self.data_kind = match value {
                    "collage" => DataKind::Collage,
                    "blobs" => DataKind::Blobs,
                    _ => match value.strip_prefix("idx:") {
                        Some(dir) if !dir.is_empty() => DataKind::Idx(dir.to_string()),
                        _ => return Err(bad(key, value, "collage, blobs, or idx:<dir>")),
                    },
                }
            }
            "data.train_n" => self.train_n = p_usize(key, value)?,
            "data.test_n" => self.test_n = p_usize(key, value)?,
            "data.classes" => self.classes = p_usize(key, value)?,
            "data.height" => self.height = p_usize(key, value)?,
            "data.width" => self.width = p_usize(key, value)?,
            "data.object_min_frac" => self.object_min_frac = p_f64(key, value)?,
            "data.object_max_frac" => self.object_max_frac = p_f64(key, value)?,
            "data.clutter" => self.clutter = p_f64(key, value)?,
            "data.blob_dim" => self.blob_dim = p_usize(key, value)?,
            "data.blob_separation" => self.blob_separation = p_f64(key, value)?,
            "model.kind" => {
                self.model = match value {
                    "conv" => ModelKind::Conv,
                    "mlp" => ModelKind::Mlp,
                    "linear" => ModelKind::Linear,
                    _ => return Err(bad(key, value, "conv, mlp, or linear")),
                }
            }
            "opt.lr" => self.lr = p_f64(key, value)?,
            "opt.momentum" => self.momentum = p_f64(key, value)?,
            "opt.weight_decay" => self.weight_decay = p_f64(key, value)?,
            "opt.epochs" => self.epochs = p_usize(key, value)?,
            "opt.batch_size" => self.batch_size = p_usize(key, value)?,
            "opt.warmup_epochs" => self.warmup_epochs = p_usize(key, value)?,
            "aug.mode" => {
                self.aug_mode = match value {
                    "none" => AugMode::None,
                    "mixup" => AugMode::Mixup,
                    "cutmix" => AugMode::Cutmix,
                    "mixup_cutmix" => AugMode::MixupCutmix,
                    "cutmix_shuffle" => AugMode::CutmixShuffle,
                    "per_patch_lambda" => AugMode::PerPatchLambda,
                    _ => {
                        return Err(bad(
                            key,
                            value,
                            "none, mixup, cutmix, mixup_cutmix, cutmix_shuffle, or per_patch_lambda",
                        ))
                    }
                }
            }
            "aug.lumix" => self.use_lumix = p_bool(key, value)?,
            "aug.shuffle_grid" => self.shuffle_grid = p_usize(key, value)?,
            "aug.patch_grid" => self.patch_grid = p_usize(key, value)?,
            "lumix.lambda0_dist" => {
                self.lambda0_kind = match value {
                    "beta" => Lambda0Kind::Beta,
                    "uniform" => Lambda0Kind::Uniform,
                    _ => return Err(bad(key, value, "beta or uniform")),
                }
            }
            "lumix.alpha0" => self.alpha0 = p_f64(key, value)?,
            "lumix.lambda_r_dist" => self.lumix.lambda_r = parse_lambda_r(key, value)?,
            "lumix.r1" => self.lumix.r1 = p_f64(key, value)?,
            "lumix.r2" => self.lumix.r2 = p_f64(key, value)?,
            "lumix.eta" => self.lumix.eta = p_f64(key, value)?,
            "lumix.smoothing_eps" => self.lumix.smoothing_eps = p_f64(key, value)?,
            "lumix.loss" => {
                self.lumix.loss = match value {
                    "softmax_ce" => LossKind::SoftmaxCe,
                    "bce" => LossKind::Bce,
                    _ => return Err(bad(key, value, "softmax_ce or bce")),
                }
            }
            "lumix.enable_lambda_s" => self.lumix.enable_lambda_s = p_bool(key, value)?,
            "lumix.enable_reg" => self.lumix.enable_reg = p_bool(key, value)?,
            "lumix.positive_mask" => {
                self.lumix.mask_mode = match value {
                    "or" => MaskMode::Or,
                    "and" => MaskMode::And,
                    _ => return Err(bad(key, value, "or or and")),
                }
            }
            "eval.metrics_subset" => self.metrics_subset = p_usize(key, value)?,
            _ => return Err(LabError::Config(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// Applies one `--set key=value` argument.
    pub fn apply_set(&mut self, arg: &str) -> Result<(), LabError> {
        let (key, value) = arg
            .split_once('=')
            .ok_or_else(|| LabError::Config(format!("--set expects key=value, got `{arg}`")))?;
        self.apply_kv(key.trim(), value.trim())
    }

    /// Parses a config text on top of the defaults.
    pub fn parse_str(text: &str) -> Result<RunConfig, LabError> {
        let mut cfg = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                LabError::Config(format!("line {}: expected key = value, got `{}`", lineno + 1, line))
            })?;
            cfg.apply_kv(key.trim(), value.trim())
                .map_err(|e| LabError::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<RunConfig, LabError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::io(format!("reading config {}", path.display()), e))?;
        RunConfig::parse_str(&text)
            .map_err(|e| LabError::Config(format!("{}: {e}", path.display())))
    }

    /// The lambda0 distribution assembled from kind + alpha0.
    pub fn lambda0_dist(&self) -> Lambda0Dist {
        match self.lambda0_kind {
            Lambda0Kind::Beta => Lambda0Dist::Beta(self.alpha0),
            Lambda0Kind::Uniform => Lambda0Dist::Uniform,
        }
    }

    /// The concrete mix mode for one batch. `None` augmentation returns None;
    /// `mixup_cutmix` resolves by the coin the trainer flipped for this batch.
    pub fn mix_mode(&self, coin_is_cutmix: bool) -> Option<MixMode> {
        match self.aug_mode {
            AugMode::None => None,
            AugMode::Mixup => Some(MixMode::Mixup),
            AugMode::Cutmix => Some(MixMode::Cutmix),
            AugMode::MixupCutmix => {
                Some(if coin_is_cutmix { MixMode::Cutmix } else { MixMode::Mixup })
            }
            AugMode::CutmixShuffle => Some(MixMode::CutmixShuffle { grid: self.shuffle_grid }),
            AugMode::PerPatchLambda => Some(MixMode::PerPatchLambda { grid: self.patch_grid }),
        }
    }

    /// Static validation; runs before any work. Data-dependent checks (grid
    /// divisibility for idx datasets, class counts from files) re-run at
    /// training time once the actual dimensions are known.
    pub fn validate(&self) -> Result<(), LabError> {
        self.lumix.validate()?;
        if self.batch_size == 0 {
            return Err(LabError::Config("opt.batch_size must be at least 1".into()));
        }
        if self.train_n == 0 || self.test_n == 0 {
            return Err(LabError::Config("data.train_n and data.test_n must be at least 1".into()));
        }
        if self.metrics_subset == 0 {
            return Err(LabError::Config("eval.metrics_subset must be at least 1".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(LabError::Config(format!("opt.lr must be positive, got {}", self.lr)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(LabError::Config(format!("opt.momentum must be in [0, 1), got {}", self.momentum)));
        }
        if self.weight_decay < 0.0 {
            return Err(LabError::Config(format!("opt.weight_decay must be >= 0, got {}", self.weight_decay)));
        }
        if self.lambda0_kind == Lambda0Kind::Beta && !(self.alpha0 > 0.0 && self.alpha0.is_finite()) {
            return Err(LabError::Config(format!("lumix.alpha0 must be positive, got {}", self.alpha0)));
        }
        match &self.data_kind {
            DataKind::Collage => {
                if !(2..=4).contains(&self.classes) {
                    return Err(LabError::Config(format!(
                        "data.classes must be 2..=4 for collage, got {}",
                        self.classes
                    )));
                }
                if !(0.0 < self.object_min_frac
                    && self.object_min_frac <= self.object_max_frac
                    && self.object_max_frac <= 1.0)
                {
                    return Err(LabError::Config(format!(
                        "need 0 < data.object_min_frac <= data.object_max_frac <= 1, got {} and {}",
                        self.object_min_frac, self.object_max_frac
                    )));
                }
                if !(0.0..=1.0).contains(&self.clutter) {
                    return Err(LabError::Config(format!("data.clutter must be in [0, 1], got {}", self.clutter)));
                }
                if self.height < 8 || self.width < 8 {
                    return Err(LabError::Config(format!(
                        "collage canvas must be at least 8x8, got {}x{}",
                        self.height, self.width
                    )));
                }
                self.check_grids(self.height, self.width)?;
            }
            DataKind::Blobs => {
                if self.classes < 2 {
                    return Err(LabError::Config(format!("data.classes must be >= 2, got {}", self.classes)));
                }
                if self.blob_dim < self.classes {
                    return Err(LabError::Config(format!(
                        "data.blob_dim {} must be >= data.classes {}",
                        self.blob_dim, self.classes
                    )));
                }
                if !(self.blob_separation >= 0.0) {
                    return Err(LabError::Config(format!(
                        "data.blob_separation must be >= 0, got {}",
                        self.blob_separation
                    )));
                }
            }
            DataKind::Idx(_) => {}
        }
        Ok(())
    }

    /// Checks model and grid constraints against concrete image dimensions.
    pub fn check_grids(&self, h: usize, w: usize) -> Result<(), LabError> {
        if self.model == ModelKind::Conv && (h % 4 != 0 || w % 4 != 0) {
            return Err(LabError::Config(format!(
                "the conv model needs height and width divisible by 4, got {h}x{w}"
            )));
        }
        if self.aug_mode == AugMode::CutmixShuffle
            && (self.shuffle_grid == 0 || h % self.shuffle_grid != 0 || w % self.shuffle_grid != 0)
        {
            return Err(LabError::Config(format!(
                "aug.shuffle_grid {} must divide the image size {h}x{w}",
                self.shuffle_grid
            )));
        }
        if self.aug_mode == AugMode::PerPatchLambda
            && (self.patch_grid == 0 || h % self.patch_grid != 0 || w % self.patch_grid != 0)
        {
            return Err(LabError::Config(format!(
                "aug.patch_grid {} must divide the image size {h}x{w}",
                self.patch_grid
            )));
        }
        Ok(())
    }

    /// Serializes every key in a fixed order; parsing the result reproduces
    /// the config exactly.
    pub fn to_canonical_string(&self) -> String {
        let mut s = String::new();
        let kind = match &self.data_kind {
            DataKind::Collage => "collage".to_string(),
            DataKind::Blobs => "blobs".to_string(),
            DataKind::Idx(dir) => format!("idx:{dir}"),
        };
        let model = match self.model {
            ModelKind::Conv => "conv",
            ModelKind::Mlp => "mlp",
            ModelKind::Linear => "linear",
        };
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s);
        let _ = writeln!(s, "data.kind = {kind}");
        let _ = writeln!(s, "data.train_n = {}", self.train_n);
        let _ = writeln!(s, "data.test_n = {}", self.test_n);
        let _ = writeln!(s, "data.classes = {}", self.classes);
        let _ = writeln!(s, "data.height = {}", self.height);
        let _ = writeln!(s, "data.width = {}", self.width);
        let _ = writeln!(s, "data.object_min_frac = {}", self.object_min_frac);
        let _ = writeln!(s, "data.object_max_frac = {}", self.object_max_frac);
        let _ = writeln!(s, "data.clutter = {}", self.clutter);
        let _ = writeln!(s, "data.blob_dim = {}", self.blob_dim);
        let _ = writeln!(s, "data.blob_separation = {}", self.blob_separation);
        let _ = writeln!(s);
        let _ = writeln!(s, "model.kind = {model}");
        let _ = writeln!(s);
        let _ = writeln!(s, "opt.lr = {}", self.lr);
        let _ = writeln!(s, "opt.momentum = {}", self.momentum);
        let _ = writeln!(s, "opt.weight_decay = {}", self.weight_decay);
        let _ = writeln!(s, "opt.epochs = {}", self.epochs);
        let _ = writeln!(s, "opt.batch_size = {}", self.batch_size);
        let _ = writeln!(s, "opt.warmup_epochs = {}", self.warmup_epochs);
        let _ = writeln!(s);
        let _ = writeln!(s, "aug.mode = {}", self.aug_mode.name());
        let _ = writeln!(s, "aug.lumix = {}", self.use_lumix);
        let _ = writeln!(s, "aug.shuffle_grid = {}", self.shuffle_grid);
        let _ = writeln!(s, "aug.patch_grid = {}", self.patch_grid);
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "lumix.lambda0_dist = {}",
            match self.lambda0_kind {
                Lambda0Kind::Beta => "beta",
                Lambda0Kind::Uniform => "uniform",
            }
        );
        let _ = writeln!(s, "lumix.alpha0 = {}", self.alpha0);
        let _ = writeln!(s, "lumix.lambda_r_dist = {}", fmt_lambda_r(self.lumix.lambda_r));
        let _ = writeln!(s, "lumix.r1 = {}", self.lumix.r1);
        let _ = writeln!(s, "lumix.r2 = {}", self.lumix.r2);
        let _ = writeln!(s, "lumix.eta = {}", self.lumix.eta);
        let _ = writeln!(s, "lumix.smoothing_eps = {}", self.lumix.smoothing_eps);
        let _ = writeln!(
            s,
            "lumix.loss = {}",
            match self.lumix.loss {
                LossKind::SoftmaxCe => "softmax_ce",
                LossKind::Bce => "bce",
            }
        );
        let _ = writeln!(s, "lumix.enable_lambda_s = {}", self.lumix.enable_lambda_s);
        let _ = writeln!(s, "lumix.enable_reg = {}", self.lumix.enable_reg);
        let _ = writeln!(
            s,
            "lumix.positive_mask = {}",
            match self.lumix.mask_mode {
                MaskMode::Or => "or",
                MaskMode::And => "and",
            }
        );
        let _ = writeln!(s);
        let _ = writeln!(s, "eval.metrics_subset = {}", self.metrics_subset);
        s
    }
}

/// Cuts a trailing comment: `#` counts only at line start or after whitespace.
fn strip_comment(line: &str) -> &str {
    let bytes = line.as_bytes();
    for (i, &b) in bytes.iter().enumerate() {
        if b == b'#' && (i == 0 || bytes[i - 1].is_ascii_whitespace()) {
            return &line[..i];
        }
    }
    line
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_canonical_text() {
        let cfg = RunConfig::default();
        let text = cfg.to_canonical_string();
        let back = RunConfig::parse_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn modified_config_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.seed = 99;
        cfg.data_kind = DataKind::Idx("runs/corpus#1".into());
        cfg.model = ModelKind::Mlp;
        cfg.aug_mode = AugMode::PerPatchLambda;
        cfg.lumix.lambda_r = LambdaRDist::Gaussian { mu: 0.5, sigma: 0.25 };
        cfg.lumix.loss = LossKind::Bce;
        cfg.lumix.mask_mode = MaskMode::And;
        cfg.lambda0_kind = Lambda0Kind::Uniform;
        cfg.weight_decay = 0.0;
        cfg.use_lumix = false;
        let back = RunConfig::parse_str(&cfg.to_canonical_string()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn comments_blank_lines_and_spacing_are_tolerated() {
        let text = "\n# full comment\n  seed =  7   # trailing\n\ndata.kind = idx:runs/a#1\n";
        let cfg = RunConfig::parse_str(text).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.data_kind, DataKind::Idx("runs/a#1".into()));
    }

    #[test]
    fn unknown_keys_and_bad_values_name_the_problem() {
        let e = RunConfig::parse_str("data.sies = 3\n").unwrap_err().to_string();
        assert!(e.contains("unknown config key `data.sies`"), "{e}");
        assert!(e.contains("line 1"), "{e}");

        let e = RunConfig::parse_str("opt.lr = fast\n").unwrap_err().to_string();
        assert!(e.contains("opt.lr") && e.contains("`fast`"), "{e}");

        let e = RunConfig::parse_str("just words\n").unwrap_err().to_string();
        assert!(e.contains("expected key = value"), "{e}");

        let e = RunConfig::parse_str("lumix.lambda_r_dist = beta\n").unwrap_err().to_string();
        assert!(e.contains("beta:<alpha>"), "{e}");
    }

    #[test]
    fn set_overrides_apply_in_order() {
        let mut cfg = RunConfig::parse_str("opt.epochs = 5\n").unwrap();
        cfg.apply_set("opt.epochs=9").unwrap();
        cfg.apply_set(" aug.mode = mixup ").unwrap();
        assert_eq!(cfg.epochs, 9);
        assert_eq!(cfg.aug_mode, AugMode::Mixup);
        assert!(cfg.apply_set("no-equals").is_err());
    }

    #[test]
    fn validation_rejects_out_of_domain_settings() {
        let mut cfg = RunConfig::default();
        cfg.lumix.r1 = 0.8;
        cfg.lumix.r2 = 0.3;
        assert!(cfg.validate().is_err());

        let mut cfg = RunConfig::default();
        cfg.batch_size = 0;
        assert!(cfg.validate().is_err());

        let mut cfg = RunConfig::default();
        cfg.momentum = 1.0;
        assert!(cfg.validate().is_err());

        let mut cfg = RunConfig::default();
        cfg.height = 30; // conv needs multiples of 4
        assert!(cfg.validate().is_err());

        let mut cfg = RunConfig::default();
        cfg.aug_mode = AugMode::CutmixShuffle;
        cfg.shuffle_grid = 5;
        assert!(cfg.validate().is_err());

        let mut cfg = RunConfig::default();
        cfg.data_kind = DataKind::Blobs;
        cfg.blob_dim = 2;
        assert!(cfg.validate().is_err());

        assert!(RunConfig::default().validate().is_ok());
    }

    #[test]
    fn mix_mode_resolves_the_coin_only_for_the_combined_mode() {
        let mut cfg = RunConfig::default();
        cfg.aug_mode = AugMode::MixupCutmix;
        assert_eq!(cfg.mix_mode(true), Some(MixMode::Cutmix));
        assert_eq!(cfg.mix_mode(false), Some(MixMode::Mixup));
        cfg.aug_mode = AugMode::Cutmix;
        assert_eq!(cfg.mix_mode(false), Some(MixMode::Cutmix));
        cfg.aug_mode = AugMode::None;
        assert_eq!(cfg.mix_mode(true), None);
    }
}
