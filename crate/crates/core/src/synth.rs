//! Seeded generator of agent-month records with planted effects.
//!
//! Each record gets a latent quality value: a weighted sum of standardized,
//! monotone effects of the eight attributes plus Gaussian noise. Records are
//! then ranked by latent value and cut into classes at the quantiles implied by
//! the requested census, so realized class counts match the proportions
//! exactly (up to largest-remainder rounding). Within a class the raw score
//! rises with rank across the class's score interval.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::dataset::{Attribute, EvaluationRecord, Month, QualityValue};
use crate::error::{Error, Result};
use crate::exec::derive_seed;
use crate::scoring::{Category, EvaluationKind, MetSub, PerformanceCategory};

/// Class counts after cleaning, customer service (met split at 3.5).
pub const CUSTOMER_SERVICE_CENSUS: [(&str, usize); 4] = [
    ("Met Some", 1469),
    ("Met 1", 5965),
    ("Met 2", 5841),
    ("Exceeded", 1396),
];

/// Class counts after cleaning, business need.
pub const BUSINESS_NEED_CENSUS: [(&str, usize); 5] = [
    ("Not Met", 63),
    ("Met Some", 3533),
    ("Met", 5974),
    ("Exceeded", 3610),
    ("Far Exceeded", 1510),
];

/// Customer-service records dropped for class size before the census above.
pub const CUSTOMER_SERVICE_DROPPED: [(&str, usize); 2] = [("Not Met", 6), ("Far Exceeded", 13)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub n_records: usize,
    pub n_agents: u32,
    pub n_products: u32,
    pub n_months: u32,
    /// First generated month.
    pub start: Month,
    /// Class name -> share, for the customer-service column.
    pub customer_service: BTreeMap<String, f64>,
    /// Class name -> share, for the business-need column.
    pub business_need: BTreeMap<String, f64>,
    /// Attribute name -> planted influence on the latent score.
    pub effect_weights: BTreeMap<String, f64>,
    pub noise_sd: f64,
    /// Every class listed in a census must receive at least this many records.
    pub min_class_count: usize,
    /// Share of agent-months flagged as in training.
    pub training_rate: f64,
    pub seed: u64,
}

fn shares(census: &[(&str, usize)]) -> BTreeMap<String, f64> {
    let total: usize = census.iter().map(|(_, c)| c).sum();
    census
        .iter()
        .map(|(k, c)| (k.to_string(), *c as f64 / total as f64))
        .collect()
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        paper_default_config(EvaluationKind::CustomerService)
    }
}

/// Config reproducing the published census for `target`. Products, agents and
/// dates carry strong planted effects; time-management attributes weak ones.
pub fn paper_default_config(target: EvaluationKind) -> GeneratorConfig {
    let n_records = match target {
        EvaluationKind::CustomerService => CUSTOMER_SERVICE_CENSUS.iter().map(|c| c.1).sum(),
        EvaluationKind::BusinessNeed => BUSINESS_NEED_CENSUS.iter().map(|c| c.1).sum(),
    };
    let effect_weights = [
        (Attribute::Product, 1.0),
        (Attribute::Agent, 0.8),
        (Attribute::Date, 0.7),
        (Attribute::Training, 0.2),
        (Attribute::Acw, 0.25),
        (Attribute::Adherence, 0.2),
        (Attribute::Aux, 0.15),
        (Attribute::Attendance, 0.1),
    ]
    .into_iter()
    .map(|(a, w)| (a.name().to_string(), w))
    .collect();
    GeneratorConfig {
        n_records,
        n_agents: 200,
        n_products: 8,
        n_months: 12,
        start: Month {
            year: 2001,
            month: 1,
        },
        customer_service: shares(&CUSTOMER_SERVICE_CENSUS),
        business_need: shares(&BUSINESS_NEED_CENSUS),
        effect_weights,
        noise_sd: 0.6,
        min_class_count: 0,
        training_rate: 0.15,
        seed: 0,
    }
}

impl GeneratorConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("generator config is always representable")
    }

    fn weight(&self, a: Attribute) -> f64 {
        self.effect_weights.get(a.name()).copied().unwrap_or(0.0)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n_records == 0 {
            return bad("n_records must be positive".into());
        }
        if i64::try_from(self.seed).is_err() {
            return bad(format!(
                "seed {} does not fit a signed 64-bit integer",
                self.seed
            ));
        }
        if self.n_agents == 0 || self.n_products == 0 || self.n_months == 0 {
            return bad("n_agents, n_products and n_months must be positive".into());
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return bad(format!(
                "noise_sd {} must be a non-negative number",
                self.noise_sd
            ));
        }
        if !(0.0..=1.0).contains(&self.training_rate) {
            return bad(format!(
                "training_rate {} outside [0, 1]",
                self.training_rate
            ));
        }
        for (k, w) in &self.effect_weights {
            if Attribute::parse(k).is_none() {
                return bad(format!("unknown attribute `{k}` in effect_weights"));
            }
            if !(*w >= 0.0 && w.is_finite()) {
                return bad(format!("effect weight for {k} must be non-negative"));
            }
        }
        Ok(())
    }
}

/// Planted importance, most important first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    pub true_importance_order: Vec<Attribute>,
}

impl GroundTruth {
    fn from_config(config: &GeneratorConfig) -> Self {
        let mut order = Attribute::ALL.to_vec();
        order.sort_by(|a, b| {
            config
                .weight(*b)
                .total_cmp(&config.weight(*a))
                .then(a.cmp(b))
        });
        Self {
            true_importance_order: order,
        }
    }

    /// Single comma-separated line.
    pub fn to_line(&self) -> String {
        let names: Vec<_> = self
            .true_importance_order
            .iter()
            .map(|a| a.name())
            .collect();
        format!("{}\n", names.join(","))
    }
}

/// Resolved census for one quality column, ordered from worst to best class.
fn resolve_census(
    column: &str,
    proportions: &BTreeMap<String, f64>,
    n: usize,
    min_count: usize,
) -> Result<Vec<(PerformanceCategory, usize)>> {
    let mut classes = Vec::with_capacity(proportions.len());
    for (name, share) in proportions {
        let class = PerformanceCategory::parse(name).ok_or_else(|| {
            Error::InvalidConfig(format!("unknown class `{name}` in {column} census"))
        })?;
        if !(*share >= 0.0 && share.is_finite()) {
            return Err(Error::InfeasibleProportions(format!(
                "{column}: share {share} for {name}"
            )));
        }
        if *share == 0.0 && min_count > 0 {
            return Err(Error::InfeasibleProportions(format!(
                "{column}: {name} has share 0 but at least {min_count} records are required"
            )));
        }
        classes.push((class, *share));
    }
    if classes.is_empty() {
        return Err(Error::InfeasibleProportions(format!(
            "{column}: empty census"
        )));
    }
    let total: f64 = classes.iter().map(|c| c.1).sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::InfeasibleProportions(format!(
            "{column}: shares sum to {total}, not 1"
        )));
    }
    classes.sort_by_key(|c| c.0);
    let split = classes.iter().any(|(c, _)| c.met_sub.is_some());
    let plain_met = classes
        .iter()
        .any(|(c, _)| c.label == Category::Met && c.met_sub.is_none());
    if split && plain_met {
        return Err(Error::InvalidConfig(format!(
            "{column}: census mixes `Met` with its halves"
        )));
    }

    // largest remainder
    let exact: Vec<f64> = classes.iter().map(|(_, s)| s / total * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| {
        (exact[b] - exact[b].floor())
            .total_cmp(&(exact[a] - exact[a].floor()))
            .then(a.cmp(&b))
    });
    let missing = n - counts.iter().sum::<usize>();
    for &i in order.iter().cycle().take(missing) {
        counts[i] += 1;
    }
    for ((class, _), count) in classes.iter().zip(&counts) {
        if *count < min_count {
            return Err(Error::InfeasibleProportions(format!(
                "{column}: {} gets {count} records, fewer than {min_count}",
                class.name()
            )));
        }
    }
    Ok(classes.into_iter().map(|c| c.0).zip(counts).collect())
}

/// Inclusive score interval of a class, in hundredths.
fn score_interval(class: PerformanceCategory) -> (u32, u32) {
    match (class.label, class.met_sub) {
        (Category::NotMet, _) => (100, 199),
        (Category::MetSome, _) => (200, 299),
        (Category::Met, None) => (300, 399),
        (Category::Met, Some(MetSub::Met1)) => (300, 349),
        (Category::Met, Some(MetSub::Met2)) => (350, 399),
        (Category::Exceeded, _) => (400, 474),
        (Category::FarExceeded, _) => (475, 500),
    }
}

/// Assigns scores by rank of `latent`: lowest latents fall into the worst class.
fn quantize(latent: &[f64], census: &[(PerformanceCategory, usize)]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..latent.len()).collect();
    order.sort_by(|&a, &b| latent[a].total_cmp(&latent[b]).then(a.cmp(&b)));
    let mut scores = vec![0.0; latent.len()];
    let mut pos = 0;
    for &(class, count) in census {
        let (lo, hi) = score_interval(class);
        let width = f64::from(hi - lo);
        for k in 0..count {
            let frac = if count > 1 {
                k as f64 / (count - 1) as f64
            } else {
                0.5
            };
            let hundredths = lo + (frac * width).round() as u32;
            scores[order[pos]] = f64::from(hundredths) / 100.0;
            pos += 1;
        }
    }
    scores
}

fn standardize(values: &mut [f64]) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    for v in values.iter_mut() {
        *v = if sd > 0.0 { (*v - mean) / sd } else { 0.0 };
    }
}

fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

/// Generates records and the planted importance order. Deterministic in the
/// config (including its seed).
pub fn generate(config: &GeneratorConfig) -> Result<(Vec<EvaluationRecord>, GroundTruth)> {
    config.validate()?;
    let n = config.n_records;
    let cs_census = resolve_census(
        "customer_service",
        &config.customer_service,
        n,
        config.min_class_count,
    )?;
    let bn_census = resolve_census(
        "business_need",
        &config.business_need,
        n,
        config.min_class_count,
    )?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let std_normal = Normal::new(0.0, 1.0).expect("valid normal");

    // Monotone per-id effects: normal draws sorted so a higher id means a
    // larger effect.
    let mut sorted_normals = |count: u32| -> Vec<f64> {
        let mut v: Vec<f64> = (0..count).map(|_| std_normal.sample(&mut rng)).collect();
        v.sort_by(f64::total_cmp);
        v
    };
    let agent_skill = sorted_normals(config.n_agents);
    let product_offset = sorted_normals(config.n_products);

    // Product-dependent time-management baselines.
    let baselines: Vec<(f64, f64, f64)> = (0..config.n_products)
        .map(|_| {
            (
                rng.random_range(60.0..400.0),
                rng.random_range(0.85..0.95),
                rng.random_range(0.02..0.08),
            )
        })
        .collect();
    let product_ids: Vec<u32> = (0..config.n_products).map(|p| 101 + p).collect();
    let mut shuffled_ids = product_ids.clone();
    shuffled_ids.shuffle(&mut rng);
    // Offsets are monotone in the product id, not in draw order.
    let offset_of_id: BTreeMap<u32, f64> = product_ids
        .iter()
        .zip(&product_offset)
        .map(|(id, off)| (*id, *off))
        .collect();

    let attendance_dist = Poisson::new(1.5).expect("valid poisson");
    let acw_spread = 0.3;
    let adherence_spread = 0.03;
    let aux_spread = 0.015;

    let mut records = Vec::with_capacity(n);
    // Raw effect values per attribute, standardized below.
    let mut effects: Vec<Vec<f64>> = vec![Vec::with_capacity(n); Attribute::ALL.len()];
    for _ in 0..n {
        let agent = rng.random_range(0..config.n_agents);
        let month = rng.random_range(0..config.n_months);
        let p = rng.random_range(0..config.n_products) as usize;
        let product_id = shuffled_ids[p];
        let training = rng.random_bool(config.training_rate);
        let (acw_base, adh_base, aux_base) = baselines[p];

        let acw_z: f64 = std_normal.sample(&mut rng);
        let acw = (acw_base * (acw_spread * acw_z).exp())
            .clamp(30.0, 600.0)
            .round();
        let adherence =
            round4((adh_base + adherence_spread * std_normal.sample(&mut rng)).clamp(0.5, 1.0));
        let aux = round4((aux_base + aux_spread * std_normal.sample(&mut rng)).max(0.0));
        let attendance = attendance_dist.sample(&mut rng) as i64;

        let t = if config.n_months > 1 {
            f64::from(month) / f64::from(config.n_months - 1)
        } else {
            0.5
        };
        let date_effect = t + 0.08 * (2.0 * PI * f64::from(month) / 6.0).sin();

        effects[Attribute::Agent.index()].push(agent_skill[agent as usize]);
        effects[Attribute::Date.index()].push(date_effect);
        effects[Attribute::Training.index()].push(if training { -1.0 } else { 0.0 });
        effects[Attribute::Product.index()].push(offset_of_id[&product_id]);
        effects[Attribute::Acw.index()].push(-(acw / acw_base).ln());
        effects[Attribute::Adherence.index()].push(adherence - adh_base);
        effects[Attribute::Aux.index()].push(-(aux - aux_base));
        effects[Attribute::Attendance.index()].push(-(attendance as f64));

        records.push(EvaluationRecord {
            agent_id: agent + 1,
            date: Month::from_ordinal(config.start.ordinal() + i64::from(month)),
            training: Some(training),
            product_id,
            customer_service: None,
            business_needs: None,
            acw_seconds: Some(acw as i64),
            adherence: Some(adherence),
            attendance: Some(attendance),
            aux: Some(aux),
        });
    }
    for e in effects.iter_mut() {
        standardize(e);
    }

    let signal: Vec<f64> = (0..n)
        .map(|i| {
            Attribute::ALL
                .iter()
                .map(|a| config.weight(*a) * effects[a.index()][i])
                .sum()
        })
        .collect();
    // Separate noise streams per column so the two targets are not identical.
    let noisy = |stream: u64| -> Vec<f64> {
        let mut r = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, stream));
        signal
            .iter()
            .map(|s| s + config.noise_sd * std_normal.sample(&mut r))
            .collect()
    };
    let cs_scores = quantize(&noisy(1), &cs_census);
    let bn_scores = quantize(&noisy(2), &bn_census);
    for (r, (cs, bn)) in records.iter_mut().zip(cs_scores.into_iter().zip(bn_scores)) {
        r.customer_service = Some(QualityValue::Score(cs));
        r.business_needs = Some(QualityValue::Score(bn));
    }
    Ok((records, GroundTruth::from_config(config)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{clean, write_csv, CleanOptions};
    use crate::scoring::categorize_f64;

    fn small(seed: u64) -> GeneratorConfig {
        GeneratorConfig {
            n_records: 2000,
            seed,
            ..paper_default_config(EvaluationKind::CustomerService)
        }
    }

    #[test]
    fn deterministic_csv() {
        let bytes = |c: &GeneratorConfig| {
            let (recs, _) = generate(c).unwrap();
            let mut buf = Vec::new();
            write_csv(&mut buf, &recs).unwrap();
            buf
        };
        assert_eq!(bytes(&small(7)), bytes(&small(7)));
        assert_ne!(bytes(&small(7)), bytes(&small(8)));
    }

    #[test]
    fn census_is_exact_and_clean() {
        let cfg = paper_default_config(EvaluationKind::BusinessNeed);
        let (recs, _) = generate(&cfg).unwrap();
        assert_eq!(recs.len(), 14690);
        let out = clean(recs, &CleanOptions::new(EvaluationKind::BusinessNeed));
        assert!(out.rejections.is_empty());
        let mut census: BTreeMap<&str, usize> = BTreeMap::new();
        for l in &out.labels {
            *census.entry(l.name()).or_default() += 1;
        }
        for (name, count) in BUSINESS_NEED_CENSUS {
            assert_eq!(census[name], count, "{name}");
        }
    }

    #[test]
    fn generated_scores_lie_in_their_class() {
        let (recs, _) = generate(&small(1)).unwrap();
        for r in &recs {
            let Some(QualityValue::Score(s)) = r.customer_service else {
                panic!()
            };
            assert!(categorize_f64(s, true).is_ok());
            assert!(r.acw_seconds.unwrap() >= 30 && r.acw_seconds.unwrap() <= 600);
            assert!(r.adherence.unwrap() >= 0.0 && r.aux.unwrap() >= 0.0);
        }
    }

    #[test]
    fn dropped_classes_vanish_after_cleaning() {
        let mut census: Vec<(&str, usize)> = CUSTOMER_SERVICE_CENSUS.to_vec();
        census.extend(CUSTOMER_SERVICE_DROPPED);
        let cfg = GeneratorConfig {
            n_records: 14690,
            customer_service: shares(&census),
            ..paper_default_config(EvaluationKind::CustomerService)
        };
        let (recs, _) = generate(&cfg).unwrap();
        let out = clean(recs, &CleanOptions::new(EvaluationKind::CustomerService));
        assert_eq!(out.records.len(), 14671);
        assert_eq!(out.rejections.len(), 19);
        let classes: std::collections::BTreeSet<_> = out.labels.iter().map(|l| l.name()).collect();
        assert_eq!(classes.len(), 4);
        assert!(!classes.contains("Not Met") && !classes.contains("Far Exceeded"));
    }

    #[test]
    fn default_weights_follow_published_findings() {
        let cfg = paper_default_config(EvaluationKind::BusinessNeed);
        assert_eq!(cfg.n_records, 14690);
        assert_eq!(cfg.business_need.len(), 5);
        assert!(cfg.weight(Attribute::Product) > cfg.weight(Attribute::Acw));
        let truth = GroundTruth::from_config(&cfg);
        assert_eq!(truth.true_importance_order[0], Attribute::Product);
        assert_eq!(
            truth.to_line(),
            "Product,Agent,Date,ACW,Training,Adherence,Aux,Attendance\n"
        );
    }

    #[test]
    fn infeasible_proportions() {
        let mut cfg = small(0);
        cfg.min_class_count = 1;
        cfg.customer_service.insert("Not Met".into(), 0.0);
        assert!(matches!(
            generate(&cfg),
            Err(Error::InfeasibleProportions(_))
        ));

        let mut cfg = small(0);
        cfg.customer_service.insert("Not Met".into(), 0.5);
        assert!(matches!(
            generate(&cfg),
            Err(Error::InfeasibleProportions(_))
        ));

        let mut cfg = small(0);
        cfg.n_records = 0;
        assert!(matches!(generate(&cfg), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn config_round_trips_through_toml() {
        let cfg = small(42);
        assert_eq!(GeneratorConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        let partial = GeneratorConfig::from_toml("n_records = 50\nseed = 3\n").unwrap();
        assert_eq!(partial.n_records, 50);
        assert_eq!(partial.n_agents, 200);
    }
}
