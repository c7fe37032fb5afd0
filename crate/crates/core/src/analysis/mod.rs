//! Per-demographic label distributions and demographic-pair gaps.

pub mod chart;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use chart::render_stacked_chart;

use crate::corpus::Sample;
use crate::regard::RegardScorer;
use crate::templates::{Axis, BiasContext, Group};
use crate::{PolarityLabel, Result};

/// One labeled item to aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScoredItem {
    pub context: BiasContext,
    pub group: Group,
    pub label: PolarityLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupDistribution {
    pub negative: f64,
    pub neutral: f64,
    pub positive: f64,
    pub n: usize,
}

impl GroupDistribution {
    pub fn from_counts(counts: [usize; 3]) -> Option<Self> {
        let n: usize = counts.iter().sum();
        (n > 0).then(|| GroupDistribution {
            negative: counts[0] as f64 / n as f64,
            neutral: counts[1] as f64 / n as f64,
            positive: counts[2] as f64 / n as f64,
            n,
        })
    }

    pub fn fractions(&self) -> [f64; 3] {
        [self.negative, self.neutral, self.positive]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionReport {
    pub scorer_name: String,
    pub context: BiasContext,
    pub per_demographic: BTreeMap<Group, GroupDistribution>,
    /// Groups omitted because they had no samples.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notices: Vec<String>,
}

/// Label fractions per demographic, one report per context that has samples.
pub fn distribution(items: &[ScoredItem], scorer_name: &str) -> Vec<DistributionReport> {
    let mut counts: BTreeMap<BiasContext, BTreeMap<Group, [usize; 3]>> = BTreeMap::new();
    for item in items {
        counts.entry(item.context).or_default().entry(item.group).or_default()[item.label.index()] += 1;
    }
    counts
        .into_iter()
        .map(|(context, groups)| {
            let mut per_demographic = BTreeMap::new();
            let mut notices = Vec::new();
            for g in Group::ALL {
                match groups.get(&g).copied().and_then(GroupDistribution::from_counts) {
                    Some(d) => {
                        per_demographic.insert(g, d);
                    }
                    None => notices.push(format!("{context}: no samples for {g}, omitted")),
                }
            }
            DistributionReport {
                scorer_name: scorer_name.to_string(),
                context,
                per_demographic,
                notices,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairGap {
    pub group_a: Group,
    pub group_b: Group,
    pub gap_negative: f64,
    pub gap_neutral: f64,
    pub gap_positive: f64,
}

impl PairGap {
    pub fn gaps(&self) -> [f64; 3] {
        [self.gap_negative, self.gap_neutral, self.gap_positive]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub scorer_name: String,
    pub context: BiasContext,
    pub pairs: Vec<PairGap>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notices: Vec<String>,
}

/// The three axis pairs in chart orientation: Black−White, man−woman, gay−straight.
pub fn default_pairs() -> Vec<(Group, Group)> {
    [Axis::Race, Axis::Gender, Axis::SexualOrientation]
        .into_iter()
        .map(Axis::pair)
        .collect()
}

pub fn pair_gap(report: &DistributionReport, a: Group, b: Group) -> Option<PairGap> {
    let da = report.per_demographic.get(&a)?;
    let db = report.per_demographic.get(&b)?;
    Some(PairGap {
        group_a: a,
        group_b: b,
        gap_negative: da.negative - db.negative,
        gap_neutral: da.neutral - db.neutral,
        gap_positive: da.positive - db.positive,
    })
}

/// Signed fraction differences `a - b` for each pair; pairs with a missing
/// group are skipped with a notice.
pub fn gaps(report: &DistributionReport, pairs: &[(Group, Group)]) -> GapReport {
    let mut out = GapReport {
        scorer_name: report.scorer_name.clone(),
        context: report.context,
        pairs: Vec::new(),
        notices: Vec::new(),
    };
    for &(a, b) in pairs {
        match pair_gap(report, a, b) {
            Some(g) => out.pairs.push(g),
            None => out
                .notices
                .push(format!("{}: pair {a}-{b} skipped, group missing", report.context)),
        }
    }
    out
}

/// How a pair's gaps differ between two scorers on the same context.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapDelta {
    pub group_a: Group,
    pub group_b: Group,
    /// `first - second`, componentwise.
    pub delta_negative: f64,
    pub delta_neutral: f64,
    pub delta_positive: f64,
    /// The negative-fraction gap has larger magnitude under the first scorer.
    pub negative_gap_wider_in_first: bool,
    pub positive_gap_wider_in_first: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapComparison {
    pub context: BiasContext,
    pub first: String,
    pub second: String,
    pub deltas: Vec<GapDelta>,
}

pub fn compare_gaps(first: &GapReport, second: &GapReport) -> GapComparison {
    let deltas = first
        .pairs
        .iter()
        .filter_map(|a| {
            let b = second
                .pairs
                .iter()
                .find(|b| b.group_a == a.group_a && b.group_b == a.group_b)?;
            Some(GapDelta {
                group_a: a.group_a,
                group_b: a.group_b,
                delta_negative: a.gap_negative - b.gap_negative,
                delta_neutral: a.gap_neutral - b.gap_neutral,
                delta_positive: a.gap_positive - b.gap_positive,
                negative_gap_wider_in_first: a.gap_negative.abs() > b.gap_negative.abs(),
                positive_gap_wider_in_first: a.gap_positive.abs() > b.gap_positive.abs(),
            })
        })
        .collect();
    GapComparison {
        context: first.context,
        first: first.scorer_name.clone(),
        second: second.scorer_name.clone(),
        deltas,
    }
}

pub const CSV_HEADER: &str = "context,scorer,demographic,negative,neutral,positive,n";

/// CSV rows in chart order within each report.
pub fn to_csv(reports: &[DistributionReport]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in reports {
        for g in Group::CHART_ORDER {
            if let Some(d) = r.per_demographic.get(&g) {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    r.context, r.scorer_name, g, d.negative, d.neutral, d.positive, d.n
                );
            }
        }
    }
    out
}

/// Where a report came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub scorer: String,
    pub corpus_digest: String,
    pub seed: u64,
    pub config_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub provenance: Provenance,
    pub distributions: Vec<DistributionReport>,
    pub gaps: Vec<GapReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub comparisons: Vec<GapComparison>,
}

/// Score `samples` with up to `jobs` threads. Output order follows input order.
///
/// Scorers see masked text unless `unmasked` is set.
pub fn score_samples(samples: &[Sample], scorer: &dyn RegardScorer, jobs: usize, unmasked: bool) -> Result<Vec<ScoredItem>> {
    let texts: Vec<&str> = samples
        .iter()
        .map(|s| if unmasked { s.raw_text.as_str() } else { s.masked_text.as_str() })
        .collect();
    let jobs = jobs.max(1);
    let results = if jobs == 1 || texts.len() < 2 {
        scorer.score_batch(&texts)?
    } else {
        let chunk = texts.len().div_ceil(jobs);
        std::thread::scope(|scope| {
            let handles: Vec<_> = texts
                .chunks(chunk)
                .map(|part| scope.spawn(move || scorer.score_batch(part)))
                .collect();
            let mut out = Vec::with_capacity(texts.len());
            for h in handles {
                out.extend(h.join().expect("scoring thread panicked")?);
            }
            Ok::<_, crate::Error>(out)
        })?
    };
    if results.len() != samples.len() {
        return Err(crate::Error::Invalid(format!(
            "scorer {} returned {} results for {} samples",
            scorer.name(),
            results.len(),
            samples.len()
        )));
    }
    Ok(samples
        .iter()
        .zip(results)
        .map(|(s, r)| ScoredItem {
            context: s.context(),
            group: s.group(),
            label: r.label,
        })
        .collect())
}

/// Distributions and gaps for every scorer; when there are two or more,
/// the first is compared against each of the others per context.
pub fn audit(
    samples: &[Sample],
    scorers: &[&dyn RegardScorer],
    provenance: Provenance,
    jobs: usize,
    unmasked: bool,
) -> Result<AuditReport> {
    let pairs = default_pairs();
    let mut distributions = Vec::new();
    let mut gap_reports = Vec::new();
    for scorer in scorers {
        let items = score_samples(samples, *scorer, jobs, unmasked)?;
        for report in distribution(&items, scorer.name()) {
            gap_reports.push(gaps(&report, &pairs));
            distributions.push(report);
        }
    }
    let mut comparisons = Vec::new();
    if let Some((first, rest)) = scorers.split_first() {
        for other in rest {
            for g in gap_reports.iter().filter(|g| g.scorer_name == first.name()) {
                if let Some(o) = gap_reports
                    .iter()
                    .find(|o| o.scorer_name == other.name() && o.context == g.context)
                {
                    comparisons.push(compare_gaps(g, o));
                }
            }
        }
    }
    Ok(AuditReport {
        provenance,
        distributions,
        gaps: gap_reports,
        comparisons,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn items(context: BiasContext, group: Group, counts: [usize; 3]) -> Vec<ScoredItem> {
        PolarityLabel::ALL
            .iter()
            .zip(counts)
            .flat_map(|(&label, n)| std::iter::repeat(ScoredItem { context, group, label }).take(n))
            .collect()
    }

    #[test]
    fn all_negative() {
        let mut all = Vec::new();
        for g in Group::ALL {
            all.extend(items(BiasContext::Respect, g, [7, 0, 0]));
        }
        let reports = distribution(&all, "x");
        assert_eq!(reports.len(), 1);
        for d in reports[0].per_demographic.values() {
            assert_eq!(d.fractions(), [1.0, 0.0, 0.0]);
        }
        assert!(reports[0].notices.is_empty());
    }

    #[test]
    fn missing_group_noticed_and_pair_skipped() {
        let all = items(BiasContext::Occupation, Group::Gay, [1, 1, 1]);
        let reports = distribution(&all, "x");
        assert_eq!(reports[0].per_demographic.len(), 1);
        assert_eq!(reports[0].notices.len(), 5);
        let g = gaps(&reports[0], &default_pairs());
        assert!(g.pairs.is_empty());
        assert_eq!(g.notices.len(), 3);
    }

    #[test]
    fn identical_distributions_have_zero_gaps() {
        let mut all = Vec::new();
        for g in Group::ALL {
            all.extend(items(BiasContext::Respect, g, [2, 3, 5]));
        }
        let g = gaps(&distribution(&all, "x")[0], &default_pairs());
        assert_eq!(g.pairs.len(), 3);
        assert!(g.pairs.iter().all(|p| p.gaps() == [0.0; 3]));
    }

    #[test]
    fn csv_layout() {
        let all = items(BiasContext::Respect, Group::White, [1, 0, 3]);
        let csv = to_csv(&distribution(&all, "regard"));
        assert_eq!(csv, format!("{CSV_HEADER}\nrespect,regard,white,0.25,0,0.75,4\n"));
    }
}
