//! Command surface for the workbench: capacity, bound, verify and table
//! reports over the built-in catalog or instance files.
//!
//! Every report carries a mode tag so a number never outruns its evidence:
//! EXACT means a verified strategy meets a certified upper bound, LOWER-ONLY
//! means achievability without a matching converse, and CONDITIONAL marks
//! the family lower bounds that presuppose a capacity-achieving one-shot
//! pair. Exit codes: 0 success, 1 input error or failed verification,
//! 2 budget exceeded, 3 internal invariant violation.

use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::str::FromStr;

use advnet_core::bounds::{self, BoundMode, BoundReport, BoundValue, BoundWitness, BoundsError};
use advnet_core::catalog::{
    build_instance, build_network, butterfly_strategy, diamond_strategy, family_c_strategy,
    family_d_strategy, family_e_strategy, mirrored_strategy, verify_strategy_with_limit,
    CatalogError, ClaimedRate, NetworkKind, ReservedSet, Strategy, StrategyReport,
};
use advnet_core::net::{enumerate_edge_cuts, Alphabet, Instance, NetworkError, Scenario};
use advnet_core::search::{self, EnumerationOptions, SearchBudget, SearchError};
use advnet_core::word;
use serde_json::json;

/// Verification work allowed before a strategy check is refused.
const DEFAULT_VERIFY_LIMIT: u128 = 1 << 22;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, files, or parameters outside a construction's range.
    Input(String),
    /// The requested computation exceeds the configured budget.
    Budget(String),
    /// A library invariant failed; not reachable from bad input.
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Budget(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(msg) => write!(f, "input error: {msg}"),
            CliError::Budget(msg) => write!(f, "budget exceeded: {msg}"),
            CliError::Internal(msg) => write!(f, "internal error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<NetworkError> for CliError {
    fn from(err: NetworkError) -> Self {
        CliError::Input(err.to_string())
    }
}

impl From<CatalogError> for CliError {
    fn from(err: CatalogError) -> Self {
        match err {
            CatalogError::BadParameter { .. } | CatalogError::BadReservedSet { .. } => {
                CliError::Input(err.to_string())
            }
            CatalogError::ScaleExceeded { .. } => CliError::Budget(err.to_string()),
            CatalogError::Network(inner) => CliError::Input(inner.to_string()),
            other => CliError::Internal(other.to_string()),
        }
    }
}

impl From<SearchError> for CliError {
    fn from(err: SearchError) -> Self {
        match err {
            SearchError::BudgetExceeded { .. } => CliError::Budget(err.to_string()),
            SearchError::BadParameter { .. } => CliError::Input(err.to_string()),
            other => CliError::Internal(other.to_string()),
        }
    }
}

impl From<BoundsError> for CliError {
    fn from(err: BoundsError) -> Self {
        match err {
            BoundsError::BudgetExceeded { .. } => CliError::Budget(err.to_string()),
            BoundsError::BadProfile { .. }
            | BoundsError::NotThreeLevel { .. }
            | BoundsError::CutsNotOrdered
            | BoundsError::NoCandidates => CliError::Input(err.to_string()),
            BoundsError::Net(inner) => CliError::Input(inner.to_string()),
            other => CliError::Internal(other.to_string()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "text" => Ok(Format::Text),
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(CliError::Input(format!("unknown format {other:?}"))),
        }
    }
}

#[derive(Clone, Debug)]
pub enum NetworkSource {
    Builtin(NetworkKind),
    SpecFile(PathBuf),
}

/// One resolved invocation: a network source plus the run parameters.
/// Optional fields fall back to the instance file's values for spec files
/// and to q=2, i=1, fixed-edges for builtins.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub source: NetworkSource,
    pub q: Option<u8>,
    pub rounds: Option<usize>,
    pub scenario: Option<Scenario>,
    pub format: Format,
    pub budget_domain: Option<u128>,
    pub budget_codes: Option<u128>,
    pub per_round_codes: bool,
}

impl RunConfig {
    pub fn builtin(kind: NetworkKind) -> Self {
        RunConfig {
            source: NetworkSource::Builtin(kind),
            q: None,
            rounds: None,
            scenario: None,
            format: Format::Text,
            budget_domain: None,
            budget_codes: None,
            per_round_codes: false,
        }
    }

    pub fn spec_file(path: PathBuf) -> Self {
        RunConfig { source: NetworkSource::SpecFile(path), ..RunConfig::builtin(NetworkKind::Diamond) }
    }

    fn search_budget(&self) -> SearchBudget {
        let base = SearchBudget::default();
        SearchBudget {
            max_domain: self.budget_domain.unwrap_or(base.max_domain),
            max_network_codes: self.budget_codes.unwrap_or(base.max_network_codes),
            max_seconds: base.max_seconds,
        }
    }

    fn verify_limit(&self) -> u128 {
        self.budget_domain.unwrap_or(DEFAULT_VERIFY_LIMIT)
    }
}

/// Maps a `--builtin` name to a catalog entry; the families take their
/// parameter from `--t`.
pub fn parse_kind(name: &str, t: Option<usize>) -> Result<NetworkKind, CliError> {
    let t = t.unwrap_or(1);
    match name {
        "diamond" => Ok(NetworkKind::Diamond),
        "mirrored" | "mirrored-diamond" => Ok(NetworkKind::MirroredDiamond),
        "butterfly" => Ok(NetworkKind::Butterfly),
        "family-a" => Ok(NetworkKind::FamilyA { t }),
        "family-b" => Ok(NetworkKind::FamilyB { s: t }),
        "family-c" => Ok(NetworkKind::FamilyC { t }),
        "family-d" => Ok(NetworkKind::FamilyD { t }),
        "family-e" => Ok(NetworkKind::FamilyE { t }),
        other => Err(CliError::Input(format!(
            "unknown builtin {other:?}; expected diamond, mirrored-diamond, butterfly, \
             or family-a through family-e"
        ))),
    }
}

pub fn kind_label(kind: NetworkKind) -> String {
    match kind {
        NetworkKind::Diamond => "diamond".into(),
        NetworkKind::MirroredDiamond => "mirrored-diamond".into(),
        NetworkKind::Butterfly => "butterfly".into(),
        NetworkKind::FamilyA { t } => format!("family-a(t={t})"),
        NetworkKind::FamilyB { s } => format!("family-b(s={s})"),
        NetworkKind::FamilyC { t } => format!("family-c(t={t})"),
        NetworkKind::FamilyD { t } => format!("family-d(t={t})"),
        NetworkKind::FamilyE { t } => format!("family-e(t={t})"),
    }
}

/// Rendered report plus the process exit code it should produce.
#[derive(Clone, Debug)]
pub struct CommandOutput {
    pub text: String,
    pub exit_code: i32,
}

impl CommandOutput {
    fn ok(text: String) -> Self {
        CommandOutput { text, exit_code: 0 }
    }
}

struct ResolvedInstance {
    instance: Instance,
    kind: Option<NetworkKind>,
    label: String,
}

fn resolve(cfg: &RunConfig) -> Result<ResolvedInstance, CliError> {
    match &cfg.source {
        NetworkSource::Builtin(kind) => {
            let alphabet = Alphabet::new(cfg.q.unwrap_or(2))?;
            let rounds = cfg.rounds.unwrap_or(1);
            let scenario = cfg.scenario.unwrap_or(Scenario::FixedEdges);
            let instance = build_instance(*kind, alphabet, rounds, scenario)?;
            Ok(ResolvedInstance { instance, kind: Some(*kind), label: kind_label(*kind) })
        }
        NetworkSource::SpecFile(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
            let mut instance = Instance::from_json(&text)?;
            if let Some(q) = cfg.q {
                instance.alphabet = Alphabet::new(q)?;
            }
            if let Some(rounds) = cfg.rounds {
                instance.adversary = instance.adversary.with_rounds(rounds);
            }
            if let Some(scenario) = cfg.scenario {
                instance.adversary = instance.adversary.with_scenario(scenario);
            }
            let label = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string());
            Ok(ResolvedInstance { instance, kind: None, label })
        }
    }
}

/// The catalog strategy for a builtin, or None for the families that only
/// carry a conditional lower bound. Family E reserves the single top
/// constant vector (b = 1).
pub fn builtin_strategy(
    kind: NetworkKind,
    alphabet: Alphabet,
    rounds: usize,
    scenario: Scenario,
) -> Result<Option<Strategy>, CliError> {
    let strategy = match kind {
        NetworkKind::Diamond => Some(diamond_strategy(alphabet, rounds, scenario)?),
        NetworkKind::MirroredDiamond => Some(mirrored_strategy(alphabet, rounds, scenario)?),
        NetworkKind::Butterfly => Some(butterfly_strategy(alphabet, rounds, scenario)?),
        NetworkKind::FamilyC { t } => Some(family_c_strategy(t, alphabet, rounds, scenario)?),
        NetworkKind::FamilyD { t } => Some(family_d_strategy(t, alphabet, rounds, scenario)?),
        NetworkKind::FamilyE { t } => {
            let reserved = ReservedSet::constant_top(alphabet, t, 1)?;
            Some(family_e_strategy(t, alphabet, rounds, &reserved, scenario)?)
        }
        NetworkKind::FamilyA { .. } | NetworkKind::FamilyB { .. } => None,
    };
    Ok(strategy)
}

/// An upper bound normalized to a code size over the instance's rounds.
#[derive(Clone, Debug)]
pub struct UpperBound {
    pub size: u128,
    pub basis: &'static str,
    pub report: BoundReport,
}

fn bound_code_size(value: &BoundValue, q: u8, rounds: usize) -> u128 {
    match *value {
        BoundValue::Symbols(s) => (q as u128)
            .checked_pow((s as usize * rounds) as u32)
            .unwrap_or(u128::MAX),
        BoundValue::CodeSize { size, .. } => size,
    }
}

/// Tightest certified upper bound available for the instance: the network
/// singleton bound always applies; the generalized bound applies on simple
/// 2-level networks whose whole source fan is vulnerable; the double
/// cut-set bound ranges over every ordered pair of minimal cuts.
pub fn best_upper_bound(
    instance: &Instance,
    budget: &SearchBudget,
) -> Result<Option<UpperBound>, CliError> {
    let net = &instance.network;
    let adv = &instance.adversary;
    let q = instance.alphabet.size();
    let rounds = adv.rounds();
    let mut best: Option<UpperBound> = None;
    let mut consider = |size: u128, basis: &'static str, report: BoundReport| {
        if best.as_ref().is_none_or(|b| size < b.size) {
            best = Some(UpperBound { size, basis, report });
        }
    };

    let singleton = bounds::singleton_cut_set_bound(net, adv)?;
    consider(bound_code_size(&singleton.value, q, rounds), "singleton-cut-set", singleton);

    let source_fan: std::collections::BTreeSet<usize> =
        net.out_edges(net.source()).iter().copied().collect();
    let all_vulnerable = *adv.vulnerable() == source_fan;
    if all_vulnerable {
        if let Some(profile) = bounds::two_level_profile(net) {
            let report = bounds::generalized_network_singleton_bound(&profile, adv.budget());
            consider(bound_code_size(&report.value, q, rounds), "generalized-singleton", report);
        }
    }

    for &term in net.terminals() {
        let cuts = enumerate_edge_cuts(net, net.node_name(term))?;
        for from in &cuts {
            for to in &cuts {
                match bounds::double_cut_set_bound(
                    instance,
                    from,
                    to,
                    bounds::DoubleCutMode::Analytic,
                    budget,
                ) {
                    Ok(report) => {
                        consider(bound_code_size(&report.value, q, rounds), "double-cut-set", report)
                    }
                    Err(BoundsError::BudgetExceeded { what, need, limit }) => {
                        return Err(CliError::Budget(format!(
                            "{what} needs {need} but the budget allows {limit}"
                        )))
                    }
                    // Pairs that are unordered or irreducible prove nothing.
                    Err(_) => continue,
                }
            }
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ModeTag {
    Exact { basis: &'static str },
    StrategyBound,
    LowerOnly,
    Conditional,
    Skipped,
}

impl ModeTag {
    /// Bare tag for table cells and machine formats.
    pub fn tag(&self) -> &'static str {
        match self {
            ModeTag::Exact { .. } => "EXACT",
            ModeTag::StrategyBound => "STRATEGY+BOUND",
            ModeTag::LowerOnly => "LOWER-ONLY",
            ModeTag::Conditional => "CONDITIONAL",
            ModeTag::Skipped => "SKIPPED",
        }
    }

    /// Tag with the evidence basis spelled out, for prose reports.
    pub fn label(&self) -> String {
        match self {
            ModeTag::Exact { basis } => format!("EXACT({basis})"),
            other => other.tag().to_owned(),
        }
    }
}

/// Capacity evidence for one builtin at one scenario.
#[derive(Clone, Debug)]
pub struct CapacityCell {
    /// Verified achievable size, or the conditional size for the families
    /// without a strategy; None when nothing is known.
    pub size: Option<u128>,
    pub rate: Option<ClaimedRate>,
    pub conditional: bool,
    pub bound: Option<UpperBound>,
    pub mode: ModeTag,
}

/// Builds, verifies, and bounds one builtin's capacity evidence.
pub fn capacity_cell(
    kind: NetworkKind,
    alphabet: Alphabet,
    rounds: usize,
    scenario: Scenario,
    cfg: &RunConfig,
) -> Result<CapacityCell, CliError> {
    let q = alphabet.size();
    match builtin_strategy(kind, alphabet, rounds, scenario)? {
        Some(strategy) => {
            let report = verify_strategy_with_limit(&strategy, cfg.verify_limit())?;
            if !report.unambiguous || !report.decoder_correct {
                return Err(CliError::Input(format!(
                    "the {} construction does not verify at q={q}, i={rounds}; \
                     it applies only where its detection capacity suffices",
                    strategy.name
                )));
            }
            let size = strategy.code.len() as u128;
            let bound = best_upper_bound(&strategy.instance, &cfg.search_budget())?;
            let mode = match &bound {
                Some(b) if b.size == size => ModeTag::Exact { basis: bound_basis(b.basis) },
                Some(_) => ModeTag::StrategyBound,
                None => ModeTag::LowerOnly,
            };
            Ok(CapacityCell {
                size: Some(size),
                rate: Some(ClaimedRate { q, size, rounds }),
                conditional: false,
                bound,
                mode,
            })
        }
        None => {
            if scenario == Scenario::FreeEdges {
                // No free-edges achievability is known for these families.
                return Ok(CapacityCell {
                    size: None,
                    rate: None,
                    conditional: true,
                    bound: None,
                    mode: ModeTag::Conditional,
                });
            }
            let net = build_network(kind)?;
            let profile = bounds::two_level_profile(&net).ok_or_else(|| {
                CliError::Internal("catalog family networks are simple 2-level".into())
            })?;
            let a = kind.standard_budget();
            let cond = search::general_2level_lower_bound(&profile, alphabet, rounds, a, 1)?;
            Ok(CapacityCell {
                size: Some(cond.size),
                rate: Some(ClaimedRate { q, size: cond.size, rounds }),
                conditional: true,
                bound: None,
                mode: ModeTag::Conditional,
            })
        }
    }
}

fn bound_basis(basis: &'static str) -> &'static str {
    match basis {
        "singleton-cut-set" => "strategy+singleton-cut-set",
        "generalized-singleton" => "strategy+generalized-singleton",
        "double-cut-set" => "strategy+double-cut-set",
        other => other,
    }
}

fn scenario_name(scenario: Scenario) -> &'static str {
    match scenario {
        Scenario::FixedEdges => "fixed",
        Scenario::FreeEdges => "free",
    }
}

fn rate_decimal(rate: f64) -> f64 {
    (rate * 1e6).round() / 1e6
}

fn witness_summary(witness: &BoundWitness) -> String {
    match witness {
        BoundWitness::Cut { terminal, edges } => {
            format!("cut {{{}}} before {terminal}", edges.join(","))
        }
        BoundWitness::CutPair { from, to } => {
            format!("cut pair {{{}}} -> {{{}}}", from.join(","), to.join(","))
        }
        BoundWitness::Partition { first, second } => {
            format!("node split {first:?} | {second:?}")
        }
    }
}

fn bound_mode_summary(mode: &BoundMode) -> String {
    match mode {
        BoundMode::Exact => "exact".into(),
        BoundMode::Exhaustive { explored, same_tables_each_round } => format!(
            "exhaustive over {explored} inner codes ({} tables per round)",
            if *same_tables_each_round { "same" } else { "independent" }
        ),
        BoundMode::Candidates { count } => format!("maximum over {count} candidate codes"),
        BoundMode::Analytic { basis } => format!("analytic via {basis} reduction"),
    }
}

/// `capacity`: achievability plus the tightest certified converse. Builtins
/// go through the catalog strategy; spec files through exhaustive search
/// over per-round network codes.
pub fn cmd_capacity(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let resolved = resolve(cfg)?;
    let instance = &resolved.instance;
    let q = instance.alphabet.size();
    let rounds = instance.adversary.rounds();
    let scenario = instance.adversary.scenario();

    let (size, rate, conditional, bound, mode, evidence) = match resolved.kind {
        Some(kind) => {
            let cell = capacity_cell(kind, instance.alphabet, rounds, scenario, cfg)?;
            let evidence = match &cell.mode {
                ModeTag::Conditional => {
                    "conditional on a capacity-achieving one-shot pair (b=1)".to_owned()
                }
                _ => "verified strategy".to_owned(),
            };
            (cell.size, cell.rate, cell.conditional, cell.bound, cell.mode, evidence)
        }
        None => {
            let options = EnumerationOptions {
                per_round_codes: cfg.per_round_codes,
                pin_forwarding: true,
            };
            let outcome =
                search::max_over_network_codes(instance, options, &cfg.search_budget())?;
            let size = outcome.size as u128;
            let bound = best_upper_bound(instance, &cfg.search_budget())?;
            let evidence = format!(
                "maximum over {} per-round network codes ({} tables per round)",
                outcome.explored,
                if outcome.per_round_codes { "independent" } else { "same" }
            );
            (
                Some(size),
                Some(ClaimedRate { q, size, rounds }),
                false,
                bound,
                ModeTag::Exact { basis: "enumeration" },
                evidence,
            )
        }
    };

    let rate_str = rate.as_ref().map(|r| r.to_string());
    let rate_dec = rate.as_ref().map(|r| rate_decimal(r.value()));
    let prefix = if conditional { ">=" } else { "" };
    let text = match cfg.format {
        Format::Text => {
            let mut out = String::new();
            out.push_str(&format!(
                "network {}  q={q} i={rounds} scenario={}\n",
                resolved.label,
                scenario_name(scenario)
            ));
            match (size, &rate_str, rate_dec) {
                (Some(size), Some(rs), Some(rd)) => {
                    out.push_str(&format!("size {prefix}{size}  rate {prefix}{rs} = {rd:.6}\n"));
                }
                _ => out.push_str("size unknown\n"),
            }
            out.push_str(&format!("evidence {evidence}\n"));
            if let Some(b) = &bound {
                out.push_str(&format!(
                    "upper bound {} via {} ({})\n",
                    b.size,
                    b.basis,
                    witness_summary(&b.report.witness)
                ));
            }
            out.push_str(&format!("mode {}\n", mode.label()));
            out
        }
        Format::Csv => {
            let mut out = String::from(
                "network,q,i,scenario,size,rate,rate_decimal,bound_size,mode\n",
            );
            out.push_str(&format!(
                "{},{q},{rounds},{},{},{},{},{},{}\n",
                resolved.label,
                scenario_name(scenario),
                size.map(|s| s.to_string()).unwrap_or_default(),
                rate_str
                    .as_deref()
                    .map(|rs| format!("{prefix}{rs}"))
                    .unwrap_or_default(),
                rate_dec.map(|rd| format!("{rd:.6}")).unwrap_or_default(),
                bound.as_ref().map(|b| b.size.to_string()).unwrap_or_default(),
                mode.label()
            ));
            out
        }
        Format::Json => {
            let value = json!({
                "command": "capacity",
                "network": resolved.label,
                "q": q,
                "i": rounds,
                "scenario": scenario_name(scenario),
                "size": size.map(u128_to_json),
                "rate": rate_str,
                "rate_decimal": rate_dec,
                "lower_bound_only": conditional,
                "evidence": evidence,
                "bound": bound.as_ref().map(|b| json!({
                    "size": u128_to_json(b.size),
                    "basis": b.basis,
                    "witness": witness_summary(&b.report.witness),
                })),
                "mode": mode.label(),
            });
            format!("{}\n", serde_json::to_string_pretty(&value).expect("serializable"))
        }
    };
    Ok(CommandOutput::ok(text))
}

fn u128_to_json(size: u128) -> serde_json::Value {
    u64::try_from(size).map(serde_json::Value::from).unwrap_or_else(|_| json!(size.to_string()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundKind {
    Singleton,
    Generalized,
    MultishotCut,
    DoubleCut,
}

impl FromStr for BoundKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "singleton" => Ok(BoundKind::Singleton),
            "generalized" => Ok(BoundKind::Generalized),
            "multishot-cut" => Ok(BoundKind::MultishotCut),
            "double-cut" => Ok(BoundKind::DoubleCut),
            other => Err(CliError::Input(format!(
                "unknown bound {other:?}; expected singleton, generalized, multishot-cut, \
                 or double-cut"
            ))),
        }
    }
}

/// `bound`: one named upper bound with its witness.
pub fn cmd_bound(cfg: &RunConfig, which: BoundKind) -> Result<CommandOutput, CliError> {
    let resolved = resolve(cfg)?;
    let instance = &resolved.instance;
    let net = &instance.network;
    let adv = &instance.adversary;
    let q = instance.alphabet.size();
    let rounds = adv.rounds();

    let report = match which {
        BoundKind::Singleton => bounds::singleton_cut_set_bound(net, adv)?,
        BoundKind::Generalized => {
            let profile = bounds::two_level_profile(net).ok_or_else(|| {
                CliError::Input("the generalized bound needs a simple 2-level network".into())
            })?;
            let source_fan: std::collections::BTreeSet<usize> =
                net.out_edges(net.source()).iter().copied().collect();
            if *adv.vulnerable() != source_fan {
                return Err(CliError::Input(
                    "the generalized bound assumes every source edge is vulnerable".into(),
                ));
            }
            bounds::generalized_network_singleton_bound(&profile, adv.budget())
        }
        BoundKind::MultishotCut => bounds::multishot_cut_set_bound(instance, &cfg.search_budget())?,
        BoundKind::DoubleCut => {
            let bound = best_double_cut(instance, &cfg.search_budget())?;
            bound.ok_or_else(|| {
                CliError::Input("no ordered cut pair reduces this network".into())
            })?
        }
    };

    let size = bound_code_size(&report.value, q, rounds);
    let (value_desc, rate) = match report.value {
        BoundValue::Symbols(s) => (format!("{s} symbols per round"), s as f64),
        BoundValue::CodeSize { q, size, rounds } => (
            format!("code size {size} over {rounds} rounds"),
            ClaimedRate { q, size, rounds }.value(),
        ),
    };
    let rate = rate_decimal(rate);
    let witness = witness_summary(&report.witness);
    let mode = bound_mode_summary(&report.mode);

    let text = match cfg.format {
        Format::Text => format!(
            "network {}  q={q} i={rounds} scenario={}\n{} bound: {value_desc}\n\
             rate {rate:.6}  size {size} over {rounds} rounds\nwitness {witness}\nmode {mode}\n",
            resolved.label,
            scenario_name(adv.scenario()),
            report.name,
        ),
        Format::Csv => format!(
            "network,q,i,scenario,bound,size,rate_decimal,witness,mode\n{},{q},{rounds},{},{},{size},{rate:.6},\"{witness}\",{mode}\n",
            resolved.label,
            scenario_name(adv.scenario()),
            report.name,
        ),
        Format::Json => {
            let value = json!({
                "command": "bound",
                "network": resolved.label,
                "q": q,
                "i": rounds,
                "scenario": scenario_name(adv.scenario()),
                "bound": report.name,
                "value": value_desc,
                "size": u128_to_json(size),
                "rate_decimal": rate,
                "witness": witness,
                "mode": mode,
            });
            format!("{}\n", serde_json::to_string_pretty(&value).expect("serializable"))
        }
    };
    Ok(CommandOutput::ok(text))
}

/// Minimum double cut-set bound over every ordered pair of minimal cuts,
/// in analytic mode. Pairs that do not reduce are skipped.
pub fn best_double_cut(
    instance: &Instance,
    budget: &SearchBudget,
) -> Result<Option<BoundReport>, CliError> {
    let net = &instance.network;
    let q = instance.alphabet.size();
    let rounds = instance.adversary.rounds();
    let mut best: Option<(u128, BoundReport)> = None;
    for &term in net.terminals() {
        let cuts = enumerate_edge_cuts(net, net.node_name(term))?;
        for from in &cuts {
            for to in &cuts {
                match bounds::double_cut_set_bound(
                    instance,
                    from,
                    to,
                    bounds::DoubleCutMode::Analytic,
                    budget,
                ) {
                    Ok(report) => {
                        let size = bound_code_size(&report.value, q, rounds);
                        if best.as_ref().is_none_or(|(b, _)| size < *b) {
                            best = Some((size, report));
                        }
                    }
                    Err(BoundsError::BudgetExceeded { what, need, limit }) => {
                        return Err(CliError::Budget(format!(
                            "{what} needs {need} but the budget allows {limit}"
                        )))
                    }
                    Err(_) => continue,
                }
            }
        }
    }
    Ok(best.map(|(_, report)| report))
}

/// `verify`: mechanical check of a builtin strategy. Exit 0 only when the
/// code is unambiguous and every decoder is correct.
pub fn cmd_verify(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let resolved = resolve(cfg)?;
    let kind = resolved.kind.ok_or_else(|| {
        CliError::Input("verify needs --builtin; instance files carry no strategy".into())
    })?;
    let instance = &resolved.instance;
    let strategy = builtin_strategy(
        kind,
        instance.alphabet,
        instance.adversary.rounds(),
        instance.adversary.scenario(),
    )?
    .ok_or_else(|| {
        CliError::Input(format!("no strategy is known for {}", kind_label(kind)))
    })?;
    let report = verify_strategy_with_limit(&strategy, cfg.verify_limit())?;
    Ok(render_verification(&strategy, &report, cfg.format))
}

/// Renders a verification report; shared by `verify` and by tests that
/// check deliberately broken strategies.
pub fn render_verification(
    strategy: &Strategy,
    report: &StrategyReport,
    format: Format,
) -> CommandOutput {
    let q = strategy.instance.alphabet.size();
    let rounds = strategy.instance.adversary.rounds();
    let source_len = strategy.code.word_len();
    let pass = report.unambiguous && report.decoder_correct;
    let collision = report.collision.map(|(x, y, term)| {
        let first = word::decode(q, source_len, x);
        let second = word::decode(q, source_len, y);
        (first, second, strategy.instance.network.node_name(term).to_owned())
    });
    let rate = rate_decimal(report.achieved_rate);

    let text = match format {
        Format::Text => {
            let mut out = format!(
                "strategy {}  q={q} i={rounds} scenario={}\n",
                strategy.name,
                scenario_name(strategy.instance.adversary.scenario())
            );
            out.push_str(&format!(
                "code size {}  claimed rate {} = {:.6}  achieved rate {rate:.6}\n",
                strategy.code.len(),
                strategy.claimed,
                rate_decimal(strategy.claimed.value()),
            ));
            out.push_str(&format!(
                "unambiguous {}\n",
                if report.unambiguous { "yes" } else { "no" }
            ));
            if let Some((first, second, term)) = &collision {
                out.push_str(&format!(
                    "colliding pair {first:?} and {second:?} at terminal {term}\n"
                ));
            }
            out.push_str(&format!(
                "decoder correct {}\n",
                if report.decoder_correct { "yes" } else { "no" }
            ));
            out.push_str(if pass { "PASS\n" } else { "FAIL\n" });
            out
        }
        Format::Csv => {
            let mut out = String::from(
                "strategy,q,i,scenario,code_size,unambiguous,decoder_correct,achieved_rate,result\n",
            );
            out.push_str(&format!(
                "{},{q},{rounds},{},{},{},{},{rate:.6},{}\n",
                strategy.name,
                scenario_name(strategy.instance.adversary.scenario()),
                strategy.code.len(),
                report.unambiguous,
                report.decoder_correct,
                if pass { "PASS" } else { "FAIL" }
            ));
            out
        }
        Format::Json => {
            let value = json!({
                "command": "verify",
                "strategy": strategy.name,
                "q": q,
                "i": rounds,
                "scenario": scenario_name(strategy.instance.adversary.scenario()),
                "code_size": strategy.code.len(),
                "unambiguous": report.unambiguous,
                "decoder_correct": report.decoder_correct,
                "achieved_rate": rate,
                "collision": collision.as_ref().map(|(first, second, term)| json!({
                    "first": first,
                    "second": second,
                    "terminal": term,
                })),
                "result": if pass { "PASS" } else { "FAIL" },
            });
            format!("{}\n", serde_json::to_string_pretty(&value).expect("serializable"))
        }
    };
    CommandOutput { text, exit_code: if pass { 0 } else { 1 } }
}

/// Parameters for the `table` command.
#[derive(Clone, Debug)]
pub struct TableConfig {
    pub q: u8,
    pub rounds: usize,
    pub format: Format,
    pub budget_domain: Option<u128>,
    pub budget_codes: Option<u128>,
}

/// One network's row: both scenarios plus a shared mode tag.
#[derive(Clone, Debug)]
pub struct TableRow {
    pub network: String,
    pub fixed: Option<TableEntry>,
    pub free: Option<TableEntry>,
    pub mode: &'static str,
}

#[derive(Clone, Debug)]
pub struct TableEntry {
    pub size: u128,
    pub rate: String,
    pub rate_decimal: f64,
    pub lower_bound_only: bool,
}

fn table_entry(cell: &CapacityCell) -> Option<TableEntry> {
    let size = cell.size?;
    let rate = cell.rate.as_ref()?;
    Some(TableEntry {
        size,
        rate: format!("{}{}", if cell.conditional { ">=" } else { "" }, rate),
        rate_decimal: rate_decimal(rate.value()),
        lower_bound_only: cell.conditional,
    })
}

/// The catalog rows of the capacity table, in presentation order.
pub fn table_kinds() -> Vec<NetworkKind> {
    vec![
        NetworkKind::Diamond,
        NetworkKind::MirroredDiamond,
        NetworkKind::FamilyA { t: 2 },
        NetworkKind::FamilyB { s: 1 },
        NetworkKind::FamilyC { t: 2 },
        NetworkKind::FamilyD { t: 1 },
        NetworkKind::FamilyE { t: 1 },
        NetworkKind::Butterfly,
    ]
}

/// Computes the capacity table rows at one alphabet size and round count.
pub fn capacity_table(cfg: &TableConfig) -> Result<Vec<TableRow>, CliError> {
    let alphabet = Alphabet::new(cfg.q)?;
    let run = RunConfig {
        budget_domain: cfg.budget_domain,
        budget_codes: cfg.budget_codes,
        ..RunConfig::builtin(NetworkKind::Diamond)
    };
    let mut rows = Vec::new();
    for kind in table_kinds() {
        let mut cells = Vec::new();
        let mut skipped = false;
        for scenario in [Scenario::FixedEdges, Scenario::FreeEdges] {
            match capacity_cell(kind, alphabet, cfg.rounds, scenario, &run) {
                Ok(cell) => cells.push(cell),
                Err(CliError::Budget(_)) => {
                    skipped = true;
                    break;
                }
                Err(other) => return Err(other),
            }
        }
        let row = if skipped {
            TableRow { network: kind_label(kind), fixed: None, free: None, mode: "SKIPPED" }
        } else {
            let mode = if cells.iter().any(|c| c.conditional) {
                "CONDITIONAL"
            } else if cells.iter().all(|c| matches!(c.mode, ModeTag::Exact { .. })) {
                "EXACT"
            } else if cells.iter().any(|c| matches!(c.mode, ModeTag::StrategyBound)) {
                "STRATEGY+BOUND"
            } else {
                "LOWER-ONLY"
            };
            TableRow {
                network: kind_label(kind),
                fixed: table_entry(&cells[0]),
                free: table_entry(&cells[1]),
                mode,
            }
        };
        rows.push(row);
    }
    Ok(rows)
}

/// `table`: the desk-scale capacity table, one row per catalog network.
pub fn cmd_table(cfg: &TableConfig) -> Result<CommandOutput, CliError> {
    let rows = capacity_table(cfg)?;
    let text = match cfg.format {
        Format::Text => render_table_text(cfg, &rows),
        Format::Csv => render_table_csv(cfg, &rows),
        Format::Json => render_table_json(cfg, &rows),
    };
    Ok(CommandOutput::ok(text))
}

fn entry_columns(entry: &Option<TableEntry>) -> (String, String) {
    match entry {
        Some(e) => {
            let marker = if e.lower_bound_only { ">=" } else { "" };
            (format!("{marker}{}", e.size), format!("{} = {:.6}", e.rate, e.rate_decimal))
        }
        None => ("?".into(), "?".into()),
    }
}

fn render_table_text(cfg: &TableConfig, rows: &[TableRow]) -> String {
    let mut lines = vec![format!(
        "{:<18} {:>2} {:>2} {:>10} {:<26} {:>10} {:<26} {}",
        "network", "q", "i", "A.1 size", "A.1 rate", "A.2 size", "A.2 rate", "mode"
    )];
    for row in rows {
        let (fixed_size, fixed_rate) = entry_columns(&row.fixed);
        let (free_size, free_rate) = entry_columns(&row.free);
        lines.push(format!(
            "{:<18} {:>2} {:>2} {:>10} {:<26} {:>10} {:<26} {}",
            row.network, cfg.q, cfg.rounds, fixed_size, fixed_rate, free_size, free_rate, row.mode
        ));
    }
    lines.push(String::new());
    lines.join("\n")
}

fn render_table_csv(cfg: &TableConfig, rows: &[TableRow]) -> String {
    let mut out = String::from(
        "network,q,i,fixed_size,fixed_rate,fixed_rate_decimal,free_size,free_rate,free_rate_decimal,mode\n",
    );
    for row in rows {
        let cell = |entry: &Option<TableEntry>| match entry {
            Some(e) => (e.size.to_string(), e.rate.clone(), format!("{:.6}", e.rate_decimal)),
            None => (String::new(), String::new(), String::new()),
        };
        let (fs, fr, fd) = cell(&row.fixed);
        let (es, er, ed) = cell(&row.free);
        out.push_str(&format!(
            "{},{},{},{fs},{fr},{fd},{es},{er},{ed},{}\n",
            row.network, cfg.q, cfg.rounds, row.mode
        ));
    }
    out
}

fn render_table_json(cfg: &TableConfig, rows: &[TableRow]) -> String {
    let entry_json = |entry: &Option<TableEntry>| {
        entry.as_ref().map(|e| {
            json!({
                "size": u128_to_json(e.size),
                "rate": e.rate,
                "rate_decimal": e.rate_decimal,
                "lower_bound_only": e.lower_bound_only,
            })
        })
    };
    let value = json!({
        "command": "table",
        "q": cfg.q,
        "i": cfg.rounds,
        "rows": rows.iter().map(|row| json!({
            "network": row.network,
            "fixed": entry_json(&row.fixed),
            "free": entry_json(&row.free),
            "mode": row.mode,
        })).collect::<Vec<_>>(),
    });
    format!("{}\n", serde_json::to_string_pretty(&value).expect("serializable"))
}
