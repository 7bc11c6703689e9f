//! Orchestration behind the command-line tool: one configuration governs
//! every hyperparameter and seed, and each stage writes its artifacts into
//! an output directory.
//!
//! Precedence is command-line flags, then the config file, then the defaults
//! below. A full run also writes the resolved `config.toml` and a
//! `manifest.json` with hashes of the config and of every artifact; running
//! again with that `config.toml` reproduces every file byte for byte.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::{
    load_csv, rejection_log_csv, write_csv, CleanDataset, CleanOptions, Month, ScalingMode,
    DEFAULT_MIN_CLASS_SIZE, PAPER_RATIOS,
};
use crate::error::{Error, Result};
use crate::evaluation::{
    evaluate, rank_models, EvaluationMatrix, EvaluationOptions, DEFAULT_FOLDS,
};
use crate::exec::{derive_seed, Execution};
use crate::models::persist::{scaling_hash, ModelFile};
use crate::models::{
    train, CartParams, ClassifierSpec, HybridParams, LabeledSet, LinearParams, MlpParams,
    ModelKind, Phase2, PnnParams, SvmParams,
};
use crate::scoring::{
    categorize, format_ratio_2dp, monthly_score, CallEvaluation, EvaluationKind,
    PerformanceCategory,
};
use crate::sensitivity::{sensitivity_grid, SensitivityGrid};
use crate::synth::{generate, paper_default_config, GeneratorConfig};

/// Environment variable naming a config file when `--config` is absent.
pub const CONFIG_ENV: &str = "CSRMINER_CONFIG";

const TRAIN_STREAM: u64 = 0x7_4A1E;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensitivityConfig {
    pub enabled: bool,
    pub models: Vec<String>,
    /// Class names to analyse; empty means every retained class.
    pub classes: Vec<String>,
}

impl Default for SensitivityConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            models: ["Linear", "BP", "BP/CG", "Hybrid"]
                .map(String::from)
                .to_vec(),
            classes: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    /// Where artifacts go; not part of the config's identity or hash.
    #[serde(skip_serializing)]
    pub out: PathBuf,
    pub target: EvaluationKind,
    pub seed: u64,
    /// Model kinds to train and evaluate, by report name.
    pub models: Vec<String>,
    /// Train / test / validation shares for the holdout protocol.
    pub ratios: [f64; 3],
    pub folds: usize,
    pub scaling: ScalingMode,
    pub min_class_size: usize,
    /// Split "Met" at 3.5; defaults to on for customer service only.
    pub split_met: Option<bool>,
    pub execution: Execution,
    pub linear: LinearParams,
    /// Shared by BP and BP/CG; the phase-2 setting is implied by the kind.
    pub mlp: MlpParams,
    pub pnn: PnnParams,
    pub cart: CartParams,
    pub svm: SvmParams,
    pub hybrid: HybridParams,
    pub sensitivity: SensitivityConfig,
    /// Generator settings; the published census for `target` when absent. Its
    /// seed is replaced by the top-level seed.
    pub synth: Option<GeneratorConfig>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            input: None,
            out: PathBuf::from("csrminer-out"),
            target: EvaluationKind::CustomerService,
            seed: 0,
            models: ModelKind::ALL
                .iter()
                .map(|k| k.name().to_string())
                .collect(),
            ratios: PAPER_RATIOS,
            folds: DEFAULT_FOLDS,
            scaling: ScalingMode::default(),
            min_class_size: DEFAULT_MIN_CLASS_SIZE,
            split_met: None,
            execution: Execution::default(),
            linear: LinearParams::default(),
            mlp: MlpParams::default(),
            pnn: PnnParams::default(),
            cart: CartParams::default(),
            svm: SvmParams::default(),
            hybrid: HybridParams::default(),
            sensitivity: SensitivityConfig::default(),
            synth: None,
        }
    }
}

fn parse_kinds(names: &[String]) -> Result<Vec<ModelKind>> {
    let mut kinds = Vec::new();
    for n in names {
        let k = ModelKind::parse(n)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown model kind `{n}`")))?;
        if !kinds.contains(&k) {
            kinds.push(k);
        }
    }
    if kinds.is_empty() {
        return Err(Error::InvalidConfig("no model kinds selected".into()));
    }
    kinds.sort_by_key(|k| ModelKind::ALL.iter().position(|x| x == k));
    Ok(kinds)
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    /// Reads `path`, else the file named by [`CONFIG_ENV`], else defaults.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let env = std::env::var_os(CONFIG_ENV).map(PathBuf::from);
        match path.map(Path::to_path_buf).or(env) {
            Some(p) => {
                let text = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
                Self::from_toml(&text)
            }
            None => Ok(Self::default()),
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// SHA-256 of the resolved TOML form.
    pub fn hash(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(self.to_toml()?.as_bytes())))
    }

    pub fn split_met(&self) -> bool {
        self.split_met
            .unwrap_or(self.target == EvaluationKind::CustomerService)
    }

    pub fn validate(&self) -> Result<()> {
        if i64::try_from(self.seed).is_err() {
            return Err(Error::InvalidConfig(format!(
                "seed {} does not fit a signed 64-bit integer",
                self.seed
            )));
        }
        crate::dataset::split_sizes(100, self.ratios)?;
        if self.folds < 2 {
            return Err(Error::InvalidConfig(format!(
                "folds = {} (need at least 2)",
                self.folds
            )));
        }
        for spec in self.specs()? {
            spec.validate()?;
        }
        if self.sensitivity.enabled {
            parse_kinds(&self.sensitivity.models)?;
            for c in &self.sensitivity.classes {
                PerformanceCategory::parse(c)
                    .ok_or_else(|| Error::InvalidConfig(format!("unknown class `{c}`")))?;
            }
        }
        Ok(())
    }

    pub fn model_kinds(&self) -> Result<Vec<ModelKind>> {
        parse_kinds(&self.models)
    }

    pub fn spec_for(&self, kind: ModelKind) -> ClassifierSpec {
        match kind {
            ModelKind::Linear => ClassifierSpec::Linear(self.linear.clone()),
            ModelKind::MlpBp => ClassifierSpec::Mlp(MlpParams {
                phase2: Phase2::None,
                ..self.mlp.clone()
            }),
            ModelKind::MlpBpCg => ClassifierSpec::Mlp(MlpParams {
                phase2: Phase2::ConjugateGradient,
                ..self.mlp.clone()
            }),
            ModelKind::Pnn => ClassifierSpec::Pnn(self.pnn.clone()),
            ModelKind::Cart => ClassifierSpec::Cart(self.cart.clone()),
            ModelKind::Hybrid => ClassifierSpec::Hybrid(self.hybrid.clone()),
            ModelKind::Svm => ClassifierSpec::Svm(self.svm.clone()),
        }
    }

    pub fn specs(&self) -> Result<Vec<ClassifierSpec>> {
        Ok(self
            .model_kinds()?
            .into_iter()
            .map(|k| self.spec_for(k))
            .collect())
    }

    pub fn clean_options(&self) -> CleanOptions {
        CleanOptions {
            target: self.target,
            min_class_size: self.min_class_size,
            split_met: self.split_met(),
        }
    }

    pub fn evaluation_options(&self) -> EvaluationOptions {
        EvaluationOptions {
            seed: self.seed,
            ratios: self.ratios,
            folds: self.folds,
            execution: self.execution,
        }
    }

    pub fn generator_config(&self) -> GeneratorConfig {
        let mut g = self
            .synth
            .clone()
            .unwrap_or_else(|| paper_default_config(self.target));
        g.seed = self.seed;
        g
    }

    fn input(&self) -> Result<&Path> {
        self.input
            .as_deref()
            .ok_or_else(|| Error::InvalidConfig("no input CSV given".into()))
    }
}

/// An error tagged with the pipeline stage that raised it.
#[derive(Debug, thiserror::Error)]
#[error("{stage}: {source}")]
pub struct StageError {
    pub stage: &'static str,
    #[source]
    pub source: Error,
}

pub type StageResult<T> = std::result::Result<T, StageError>;

trait AtStage<T> {
    fn at(self, stage: &'static str) -> StageResult<T>;
}

impl<T> AtStage<T> for Result<T> {
    fn at(self, stage: &'static str) -> StageResult<T> {
        self.map_err(|source| StageError { stage, source })
    }
}

/// Files written by a stage, relative to the output directory, with hashes.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Artifacts {
    pub files: BTreeMap<String, String>,
}

impl Artifacts {
    fn write(&mut self, out: &Path, rel: &str, contents: &[u8]) -> Result<()> {
        let path = out.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.files
            .insert(rel.to_string(), hex::encode(Sha256::digest(contents)));
        Ok(())
    }

    fn extend(&mut self, other: Artifacts) {
        self.files.extend(other.files);
    }
}

impl fmt::Display for Artifacts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for name in self.files.keys() {
            writeln!(f, "{name}")?;
        }
        Ok(())
    }
}

pub struct SynthOutput {
    pub csv: PathBuf,
    pub records: usize,
    pub artifacts: Artifacts,
}

/// Generates a dataset into `records.csv` and `ground_truth.txt`.
pub fn cmd_synth(config: &RunConfig, n_records: Option<usize>) -> StageResult<SynthOutput> {
    let mut gen = config.generator_config();
    if let Some(n) = n_records {
        gen.n_records = n;
    }
    let (records, truth) = generate(&gen).at("synth")?;
    let mut buf = Vec::new();
    write_csv(&mut buf, &records).at("synth")?;
    let mut artifacts = Artifacts::default();
    artifacts
        .write(&config.out, "records.csv", &buf)
        .at("synth")?;
    artifacts
        .write(&config.out, "ground_truth.txt", truth.to_line().as_bytes())
        .at("synth")?;
    Ok(SynthOutput {
        csv: config.out.join("records.csv"),
        records: records.len(),
        artifacts,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredMonth {
    pub agent_id: u32,
    pub date: Month,
    pub kind: EvaluationKind,
    pub calls: usize,
    pub sum: u64,
    pub applicable: u64,
    pub score: String,
    pub category: PerformanceCategory,
}

/// Header of the per-call question score input: identity columns followed by
/// up to sixteen question scores (blank cells are ignored).
pub const SCORE_INPUT_HEADER: [&str; 4] = ["agent_id", "date", "kind", "product_id"];

/// Input line number and reason.
pub type RowRejection = (usize, String);

/// Scores per-call question rows into monthly scores per (agent, month, kind).
/// Unusable rows are logged and skipped.
pub fn score_calls<R: std::io::Read>(
    reader: R,
    split_met: bool,
) -> Result<(Vec<ScoredMonth>, Vec<RowRejection>)> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.len() < 5 || header.iter().take(4).ne(SCORE_INPUT_HEADER) {
        return Err(Error::SchemaMismatch(format!(
            "expected {} then question columns",
            SCORE_INPUT_HEADER.join(",")
        )));
    }
    let mut groups: BTreeMap<(u32, Month, EvaluationKind), Vec<CallEvaluation>> = BTreeMap::new();
    let mut skipped = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let parsed = rec.map_err(Error::from).and_then(|rec| {
            let field = |j: usize| rec.get(j).unwrap_or("").trim();
            let bad = |column: &str, reason: String| Error::MalformedRow {
                row,
                column: column.to_string(),
                reason,
            };
            let agent: u32 = field(0)
                .parse()
                .map_err(|e| bad("agent_id", format!("{e}")))?;
            let date =
                Month::parse(field(1)).ok_or_else(|| bad("date", "expected mm/01/yyyy".into()))?;
            let kind: EvaluationKind = field(2).parse()?;
            let product: u32 = field(3)
                .parse()
                .map_err(|e| bad("product_id", format!("{e}")))?;
            let values = (4..rec.len())
                .map(field)
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<i64>()
                        .map_err(|e| bad("question", format!("{e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            let call = CallEvaluation::from_values(kind, &values, product)?;
            crate::scoring::call_score(&call)?;
            Ok(((agent, date, kind), call))
        });
        match parsed {
            Ok((key, call)) => groups.entry(key).or_default().push(call),
            Err(e) => {
                log::warn!("score input row {row} skipped: {e}");
                skipped.push((row, e.to_string()));
            }
        }
    }
    let mut out = Vec::with_capacity(groups.len());
    for ((agent_id, date, kind), calls) in groups {
        let m = monthly_score(&calls)?;
        out.push(ScoredMonth {
            agent_id,
            date,
            kind,
            calls: calls.len(),
            sum: m.sum(),
            applicable: m.applicable_count(),
            score: format_ratio_2dp(m.value()),
            category: categorize(
                m.value(),
                split_met && kind == EvaluationKind::CustomerService,
            )?,
        });
    }
    Ok((out, skipped))
}

pub fn cmd_score(config: &RunConfig) -> StageResult<(Vec<ScoredMonth>, Artifacts)> {
    let input = config.input().at("score")?;
    let file = std::fs::File::open(input)
        .map_err(|e| Error::io(input, e))
        .at("score")?;
    let (months, skipped) = score_calls(file, config.split_met()).at("score")?;
    let inner = || -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "agent_id",
            "date",
            "kind",
            "calls",
            "sum",
            "applicable",
            "score",
            "category",
        ])?;
        for m in &months {
            w.write_record([
                m.agent_id.to_string(),
                m.date.to_string(),
                m.kind.name().to_string(),
                m.calls.to_string(),
                m.sum.to_string(),
                m.applicable.to_string(),
                m.score.clone(),
                m.category.name().to_string(),
            ])?;
        }
        crate::evaluation::finish_csv(w)
    };
    let bytes = inner().at("score")?;
    let mut log = String::from("row,reason\n");
    for (row, reason) in &skipped {
        log.push_str(&format!("{row},\"{}\"\n", reason.replace('"', "'")));
    }
    let mut artifacts = Artifacts::default();
    artifacts
        .write(&config.out, "scores.csv", bytes.as_bytes())
        .at("score")?;
    artifacts
        .write(&config.out, "score_rejections.csv", log.as_bytes())
        .at("score")?;
    Ok((months, artifacts))
}

pub struct CleanOutput {
    pub dataset: CleanDataset,
    pub rejected: usize,
    pub artifacts: Artifacts,
}

/// Loads, cleans and scales the input; writes the cleaned records, the
/// rejection log and the class census.
pub fn cmd_clean(config: &RunConfig) -> StageResult<CleanOutput> {
    let input = config.input().at("load")?;
    let records = load_csv(input).at("load")?;
    let (dataset, rejections) =
        CleanDataset::from_records(records, &config.clean_options(), config.scaling).at("clean")?;
    if dataset.is_empty() {
        return Err(Error::EmptyDataset).at("clean");
    }
    let mut artifacts = Artifacts::default();
    let mut buf = Vec::new();
    write_csv(&mut buf, &dataset.records).at("clean")?;
    artifacts
        .write(&config.out, "clean.csv", &buf)
        .at("clean")?;
    artifacts
        .write(
            &config.out,
            "rejections.csv",
            rejection_log_csv(&rejections).as_bytes(),
        )
        .at("clean")?;
    let mut census = String::from("class,count\n");
    for (c, n) in &dataset.class_census {
        census.push_str(&format!("{},{n}\n", c.name()));
    }
    artifacts
        .write(&config.out, "census.csv", census.as_bytes())
        .at("clean")?;
    Ok(CleanOutput {
        dataset,
        rejected: rejections.len(),
        artifacts,
    })
}

fn slug(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() {
                c.to_ascii_lowercase()
            } else {
                '-'
            }
        })
        .collect()
}

/// Trains every configured kind for every retained class on all retained
/// records and writes one model file per pair plus the scaling parameters.
pub fn cmd_train(config: &RunConfig, dataset: &CleanDataset) -> StageResult<Artifacts> {
    let specs = config.specs().at("train")?;
    let classes = dataset.classes();
    let cells: Vec<(PerformanceCategory, ClassifierSpec)> = classes
        .iter()
        .flat_map(|&c| specs.iter().map(move |s| (c, s.clone())))
        .collect();
    let base = derive_seed(config.seed, TRAIN_STREAM);
    let trained = config.execution.map(cells, |(class, spec)| {
        let set = LabeledSet::new(dataset.features.clone(), dataset.binary_labels(class));
        let seed = crate::evaluation::cell_seed(base, class, spec.kind());
        train(&spec, &set, None, seed).map(|m| (class, m))
    });
    let mut artifacts = Artifacts::default();
    let scaling_json = serde_json::to_string_pretty(&dataset.scaling)
        .map_err(Error::from)
        .at("train")?;
    artifacts
        .write(&config.out, "scaling.json", scaling_json.as_bytes())
        .at("train")?;
    for result in trained {
        let (class, model) = result.at("train")?;
        let name = format!(
            "models/{}_{}.json",
            slug(class.name()),
            slug(model.kind().name())
        );
        let file = ModelFile::new(
            model,
            Some(class.name().to_string()),
            Some(&dataset.scaling),
        );
        artifacts
            .write(&config.out, &name, file.to_json().as_bytes())
            .at("train")?;
    }
    debug_assert!(artifacts.files.len() > 1 || classes.is_empty());
    log::info!("scaling hash {}", scaling_hash(&dataset.scaling));
    Ok(artifacts)
}

fn target_title(target: EvaluationKind) -> &'static str {
    match target {
        EvaluationKind::CustomerService => "Customer Service Satisfaction",
        EvaluationKind::BusinessNeed => "Business Need Satisfaction",
    }
}

pub fn cmd_evaluate(
    config: &RunConfig,
    dataset: &CleanDataset,
) -> StageResult<(EvaluationMatrix, Artifacts)> {
    let specs = config.specs().at("evaluate")?;
    let matrix = evaluate(&specs, dataset, &config.evaluation_options()).at("evaluate")?;
    let ranking = rank_models(&matrix).at("evaluate")?;
    let mut text = matrix
        .to_text(&format!(
            "{} - Classification Accuracy",
            target_title(config.target)
        ))
        .at("evaluate")?;
    let names: Vec<&str> = ranking.iter().map(|k| k.name()).collect();
    text.push_str(&format!(
        "\nRanking by mean overall accuracy: {}\n",
        names.join(", ")
    ));
    let mut artifacts = Artifacts::default();
    artifacts
        .write(
            &config.out,
            "evaluation.csv",
            matrix.to_csv().at("evaluate")?.as_bytes(),
        )
        .at("evaluate")?;
    artifacts
        .write(&config.out, "evaluation.txt", text.as_bytes())
        .at("evaluate")?;
    Ok((matrix, artifacts))
}

pub fn cmd_sensitivity(
    config: &RunConfig,
    dataset: &CleanDataset,
) -> StageResult<(SensitivityGrid, Artifacts)> {
    let kinds = parse_kinds(&config.sensitivity.models).at("sensitivity")?;
    let specs: Vec<ClassifierSpec> = kinds.iter().map(|&k| config.spec_for(k)).collect();
    let classes = if config.sensitivity.classes.is_empty() {
        dataset.classes()
    } else {
        config
            .sensitivity
            .classes
            .iter()
            .map(|c| {
                PerformanceCategory::parse(c)
                    .filter(|p| dataset.class_census.contains_key(p))
                    .ok_or_else(|| Error::InvalidConfig(format!("class `{c}` is not in the data")))
            })
            .collect::<Result<Vec<_>>>()
            .at("sensitivity")?
    };
    let grid = sensitivity_grid(&specs, dataset, &classes, &config.evaluation_options())
        .at("sensitivity")?;
    let mut artifacts = Artifacts::default();
    artifacts
        .write(
            &config.out,
            "sensitivity.csv",
            grid.to_csv().at("sensitivity")?.as_bytes(),
        )
        .at("sensitivity")?;
    artifacts
        .write(
            &config.out,
            "sensitivity_errors.csv",
            grid.errors_csv().at("sensitivity")?.as_bytes(),
        )
        .at("sensitivity")?;
    let title = format!(
        "{} - Ranking of the Inputs (importance)",
        target_title(config.target)
    );
    artifacts
        .write(
            &config.out,
            "sensitivity.txt",
            grid.to_text(&title).as_bytes(),
        )
        .at("sensitivity")?;
    Ok((grid, artifacts))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    /// Input CSV as given, or `records.csv` when it was generated.
    pub input: String,
    pub input_hash: String,
    pub records: usize,
    pub rejected: usize,
    pub artifacts: BTreeMap<String, String>,
}

/// Clean, train, evaluate and (optionally) rank inputs. Without an input a
/// dataset is generated first.
pub fn cmd_run(config: &RunConfig) -> StageResult<Manifest> {
    config.validate().at("config")?;
    let given = config;
    let mut artifacts = Artifacts::default();
    let mut config = given.clone();
    let input_name = match &given.input {
        Some(p) => p.display().to_string(),
        None => {
            let synth = cmd_synth(&config, None)?;
            artifacts.extend(synth.artifacts);
            config.input = Some(synth.csv);
            "records.csv".to_string()
        }
    };
    let input = config.input.clone().expect("set above");
    let input_bytes = std::fs::read(&input)
        .map_err(|e| Error::io(&input, e))
        .at("load")?;

    let cleaned = cmd_clean(&config)?;
    artifacts.extend(cleaned.artifacts);
    let dataset = cleaned.dataset;
    artifacts.extend(cmd_train(&config, &dataset)?);
    artifacts.extend(cmd_evaluate(&config, &dataset)?.1);
    if config.sensitivity.enabled {
        artifacts.extend(cmd_sensitivity(&config, &dataset)?.1);
    }

    let toml = given.to_toml().at("manifest")?;
    artifacts
        .write(&config.out, "config.toml", toml.as_bytes())
        .at("manifest")?;
    let manifest = Manifest {
        tool: "csrminer".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_hash: given.hash().at("manifest")?,
        seed: config.seed,
        input: input_name,
        input_hash: hex::encode(Sha256::digest(&input_bytes)),
        records: dataset.len(),
        rejected: cleaned.rejected,
        artifacts: artifacts.files,
    };
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(Error::from)
        .at("manifest")?;
    std::fs::write(config.out.join("manifest.json"), json)
        .map_err(|e| Error::io(config.out.join("manifest.json"), e))
        .at("manifest")?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_published_settings() {
        let c = RunConfig::default();
        assert_eq!(c.mlp.hidden_neurons, 113);
        assert_eq!(c.mlp.epochs, 100);
        assert_eq!(c.cart.max_depth, 32);
        assert_eq!(c.svm.kernel_degree, 3);
        assert_eq!(c.ratios, [0.5, 0.25, 0.25]);
        assert_eq!(c.folds, 10);
        assert_eq!(c.model_kinds().unwrap(), ModelKind::ALL.to_vec());
        assert!(c.split_met());
        c.validate().unwrap();
    }

    #[test]
    fn toml_round_trip_and_partial_files() {
        let c = RunConfig::default();
        let back = RunConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(back, c);
        let partial =
            RunConfig::from_toml("seed = 9\nmodels = [\"cart\", \"linear\"]\n[mlp]\nepochs = 5\n")
                .unwrap();
        assert_eq!(partial.seed, 9);
        assert_eq!(partial.mlp.epochs, 5);
        assert_eq!(partial.mlp.hidden_neurons, 113);
        assert_eq!(
            partial.model_kinds().unwrap(),
            vec![ModelKind::Linear, ModelKind::Cart]
        );
        assert!(RunConfig::from_toml("sed = 9").is_err());
    }

    #[test]
    fn bad_configs_are_rejected() {
        let mut c = RunConfig {
            models: vec!["perceptron".into()],
            ..RunConfig::default()
        };
        assert!(matches!(c.validate(), Err(Error::InvalidConfig(_))));
        c.models = vec!["svm".into()];
        c.seed = u64::MAX;
        assert!(matches!(c.validate(), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn scores_the_worked_example_and_skips_unusable_rows() {
        let input = "agent_id,date,kind,product_id,q1,q2,q3,q4,q5,q6,q7,q8,q9,q10,q11\n\
                     1,09/01/2001,customer-service,226,3,4,1,0,0,0,0,0,0,0,0\n\
                     2,09/01/2001,customer-service,226,0,0,0,0,0,0,0,0,0,0,0\n\
                     3,09/01/2001,customer-service,226,5,5,5,5,5,5,5,5,5,5,7\n";
        let (months, skipped) = score_calls(input.as_bytes(), true).unwrap();
        assert_eq!(months.len(), 1);
        assert_eq!(months[0].score, "2.67");
        assert_eq!(months[0].category.name(), "Met Some");
        assert_eq!(skipped.len(), 2);
        assert_eq!(skipped[0].0, 2);
        assert!(skipped[0].1.contains("applicable"), "{}", skipped[0].1);
    }
}
