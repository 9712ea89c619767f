//! Event detection in periodic count series: weekly-median detrending, the
//! chain problem graph, run-based event extraction, a per-slot Poisson-rate
//! baseline, and a seeded synthetic series generator for end-to-end tests.

use chrono::{NaiveDate, NaiveDateTime, NaiveTime};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::Poisson;
use std::collections::BTreeMap;
use std::path::Path;

use super::DatasetError;
use crate::graph::{build_graph, ProblemGraph, VectorList};
use crate::objectives::EventObjective;

/// Slots per weekly cycle at 30-minute readings: 7 * 24 * 2.
pub const WEEK_SLOTS: usize = 336;
pub const SLOT_MINUTES: i64 = 30;

/// One experiment's series plus the sweep parameters.
#[derive(Debug, Clone)]
pub struct EventSeriesSpec {
    /// `(in, out)` counts per slot.
    pub counts: Vec<[f64; 2]>,
    pub period: usize,
    /// Lasso weights swept while the edge parameter stays fixed.
    pub mu_grid: Vec<f64>,
    pub lambda: f64,
    /// Minimum run length that counts as an event.
    pub k_min: usize,
}

/// Per-slot weekly medians and the detrended observations.
#[derive(Debug, Clone)]
pub struct DetrendedSeries {
    /// `counts[i] - median(slot of i)` per slot.
    pub xbar: Vec<[f64; 2]>,
    /// Median `(in, out)` per slot of the week.
    pub medians: Vec<[f64; 2]>,
}

/// Median per weekly slot; the median resists the shifts caused by the very
/// events being hunted.
pub fn detrend_series(counts: &[[f64; 2]], period: usize) -> DetrendedSeries {
    assert!(period > 0 && counts.len() >= period);
    let mut medians = Vec::with_capacity(period);
    for slot in 0..period {
        let mut column = [Vec::new(), Vec::new()];
        let mut i = slot;
        while i < counts.len() {
            column[0].push(counts[i][0]);
            column[1].push(counts[i][1]);
            i += period;
        }
        medians.push([median(&mut column[0]), median(&mut column[1])]);
    }
    let xbar = counts
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let m = medians[i % period];
            [c[0] - m[0], c[1] - m[1]]
        })
        .collect();
    DetrendedSeries { xbar, medians }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite counts"));
    let n = values.len();
    if n == 0 {
        0.0
    } else if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Chain graph over the slots (node `i` linked to `i + 1`, unit weights)
/// with one detrended event objective per node.
pub fn chain_event_graph(xbar: &[[f64; 2]], mu: f64) -> Result<ProblemGraph, DatasetError> {
    let m = xbar.len();
    let edges: Vec<(usize, usize, f64)> = (1..m).map(|i| (i - 1, i, 1.0)).collect();
    let mut g = build_graph(m, 2, &edges)?;
    for (i, &xb) in xbar.iter().enumerate() {
        g.set_objective(i, Box::new(EventObjective::new(xb, mu)));
    }
    Ok(g)
}

/// Maximal runs of consecutive slots with `x_in + x_out > 0`, kept when at
/// least `k_min` slots long. Intervals are half-open `[start, end)`.
pub fn detect_events(x: &VectorList, k_min: usize) -> Vec<(usize, usize)> {
    let mut events = Vec::new();
    let mut start = None;
    for i in 0..=x.count() {
        let positive = i < x.count() && x.row(i)[0] + x.row(i)[1] > 0.0;
        match (start, positive) {
            (None, true) => start = Some(i),
            (Some(s), false) => {
                if i - s >= k_min.max(1) {
                    events.push((s, i));
                }
                start = None;
            }
            _ => {}
        }
    }
    events
}

/// Per-slot Poisson-rate baseline. Rates are the slot means (the maximum
/// likelihood estimate); a slot is flagged when the joint in/out pmf falls
/// below `epsilon` while at least one direction exceeds its rate, and flagged
/// runs of length >= `k_min` become predicted events.
pub fn poisson_baseline(
    counts: &[[f64; 2]],
    period: usize,
    epsilon: f64,
    k_min: usize,
) -> Vec<(usize, usize)> {
    assert!(period > 0 && counts.len() >= period);
    let mut rates = vec![[0.0f64; 2]; period];
    let mut totals = vec![0usize; period];
    for (i, c) in counts.iter().enumerate() {
        rates[i % period][0] += c[0];
        rates[i % period][1] += c[1];
        totals[i % period] += 1;
    }
    for (r, t) in rates.iter_mut().zip(&totals) {
        r[0] /= *t as f64;
        r[1] /= *t as f64;
    }
    let max_count = counts
        .iter()
        .flat_map(|c| c.iter())
        .fold(0.0f64, |acc, &v| acc.max(v)) as usize;
    let ln_fact = ln_factorial_table(max_count);
    let ln_eps = epsilon.ln();

    let flagged: Vec<bool> = counts
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let r = rates[i % period];
            let lp = ln_poisson_pmf(c[0], r[0], &ln_fact) + ln_poisson_pmf(c[1], r[1], &ln_fact);
            lp < ln_eps && (c[0] > r[0] || c[1] > r[1])
        })
        .collect();

    let mut events = Vec::new();
    let mut start = None;
    for i in 0..=flagged.len() {
        let on = i < flagged.len() && flagged[i];
        match (start, on) {
            (None, true) => start = Some(i),
            (Some(s), false) => {
                if i - s >= k_min.max(1) {
                    events.push((s, i));
                }
                start = None;
            }
            _ => {}
        }
    }
    events
}

fn ln_factorial_table(max_n: usize) -> Vec<f64> {
    let mut table = Vec::with_capacity(max_n + 1);
    table.push(0.0);
    for n in 1..=max_n {
        table.push(table[n - 1] + (n as f64).ln());
    }
    table
}

fn ln_poisson_pmf(count: f64, rate: f64, ln_fact: &[f64]) -> f64 {
    let n = count.round().max(0.0) as usize;
    if rate <= 0.0 {
        return if n == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    -rate + n as f64 * rate.ln() - ln_fact[n]
}

/// Count of true events overlapped by at least one prediction; each truth
/// counts once no matter how many predictions hit it.
pub fn match_events(predicted: &[(usize, usize)], truth: &[(usize, usize)]) -> usize {
    truth
        .iter()
        .filter(|&&(ts, te)| predicted.iter().any(|&(ps, pe)| ps < te && ts < pe))
        .count()
}

/// Loads the 30-minute entry/exit count format: rows of
/// `flow,date,time,count` with flow id 7 = out and 9 = in. Returns the
/// contiguous series and its first timestamp.
pub fn load_calit2_counts(path: &Path) -> Result<(Vec<[f64; 2]>, NaiveDateTime), DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)?;
    let mut slots: BTreeMap<NaiveDateTime, [f64; 2]> = BTreeMap::new();
    for (idx, row) in reader.records().enumerate() {
        let row = row?;
        let err = |msg: String| DatasetError::Parse {
            path: path.display().to_string(),
            line: idx + 1,
            msg,
        };
        if row.len() < 4 {
            return Err(err(format!("expected 4 fields, got {}", row.len())));
        }
        let flow: u32 = row[0].trim().parse().map_err(|e| err(format!("bad flow id: {e}")))?;
        let stamp = parse_datetime(row[1].trim(), row[2].trim())
            .ok_or_else(|| err(format!("bad timestamp `{} {}`", &row[1], &row[2])))?;
        let count: f64 = row[3].trim().parse().map_err(|e| err(format!("bad count: {e}")))?;
        let entry = slots.entry(stamp).or_insert([0.0, 0.0]);
        match flow {
            9 => entry[0] += count,
            7 => entry[1] += count,
            other => return Err(err(format!("unknown flow id {other}"))),
        }
    }
    let (&start, _) = slots.iter().next().ok_or_else(|| DatasetError::Parse {
        path: path.display().to_string(),
        line: 0,
        msg: "empty count file".to_string(),
    })?;
    let (&end, _) = slots.iter().next_back().unwrap();
    let total = ((end - start).num_minutes() / SLOT_MINUTES) as usize + 1;
    let mut counts = vec![[0.0; 2]; total];
    for (stamp, value) in slots {
        let slot = ((stamp - start).num_minutes() / SLOT_MINUTES) as usize;
        counts[slot] = value;
    }
    Ok((counts, start))
}

fn parse_datetime(date: &str, time: &str) -> Option<NaiveDateTime> {
    let date = NaiveDate::parse_from_str(date, "%m/%d/%y")
        .or_else(|_| NaiveDate::parse_from_str(date, "%m/%d/%Y"))
        .ok()?;
    let time = NaiveTime::parse_from_str(time, "%H:%M:%S")
        .or_else(|_| NaiveTime::parse_from_str(time, "%H:%M"))
        .ok()?;
    Some(date.and_time(time))
}

/// Loads a truth-event CSV into half-open slot intervals relative to
/// `start`. Rows may be `date,begin_time,end_time[,name]` or
/// `start_date,start_time,end_date,end_time[,name]`.
pub fn load_event_list(
    path: &Path,
    start: NaiveDateTime,
    n_slots: usize,
) -> Result<Vec<(usize, usize)>, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)?;
    let mut events = Vec::new();
    for (idx, row) in reader.records().enumerate() {
        let row = row?;
        let err = |msg: String| DatasetError::Parse {
            path: path.display().to_string(),
            line: idx + 1,
            msg,
        };
        let fields: Vec<&str> = row.iter().map(str::trim).collect();
        if fields.iter().all(|f| f.is_empty()) {
            continue;
        }
        let (begin, end) = if fields.len() >= 4 && parse_datetime(fields[2], fields[3]).is_some() {
            (
                parse_datetime(fields[0], fields[1]),
                parse_datetime(fields[2], fields[3]),
            )
        } else if fields.len() >= 3 {
            (
                parse_datetime(fields[0], fields[1]),
                parse_datetime(fields[0], fields[2]),
            )
        } else {
            return Err(err("expected at least 3 fields".to_string()));
        };
        let (begin, end) = match (begin, end) {
            (Some(b), Some(e)) if e > b => (b, e),
            _ => return Err(err(format!("bad event timestamps in `{fields:?}`"))),
        };
        let to_slot = |t: NaiveDateTime| (t - start).num_minutes() as f64 / SLOT_MINUTES as f64;
        let s = to_slot(begin).floor().max(0.0) as usize;
        let e = (to_slot(end).ceil() as usize).min(n_slots);
        if s < e {
            events.push((s, e));
        }
    }
    Ok(events)
}

/// Synthetic series in the same shape as the real data: a weekly base rate
/// with Poisson noise, sporadic one-slot bursts, and two cohorts of
/// injected events recorded as ground truth — short strong bursts that any
/// detector finds, and long subtle daytime increases whose per-slot
/// deviation hides inside the base noise.
#[derive(Debug, Clone)]
pub struct SyntheticEventSpec {
    pub weeks: usize,
    pub n_events: usize,
    pub seed: u64,
    /// Weekday working-hours base rate; nights and weekends scale it down.
    pub day_rate: f64,
    pub night_rate: f64,
    /// Length and extra-rate ranges of the strong cohort.
    pub event_len_range: (usize, usize),
    pub event_boost_range: (f64, f64),
    /// Fraction of events in the subtle cohort, with its own ranges.
    pub subtle_fraction: f64,
    pub subtle_len_range: (usize, usize),
    pub subtle_boost_range: (f64, f64),
    /// Per-slot probability of a one-slot noise burst.
    pub spike_prob: f64,
    pub spike_scale: f64,
}

impl Default for SyntheticEventSpec {
    fn default() -> Self {
        SyntheticEventSpec {
            weeks: 15,
            n_events: 30,
            seed: 0,
            day_rate: 12.0,
            night_rate: 0.5,
            event_len_range: (3, 6),
            event_boost_range: (8.0, 16.0),
            subtle_fraction: 0.6,
            subtle_len_range: (6, 12),
            subtle_boost_range: (2.5, 5.0),
            spike_prob: 0.01,
            spike_scale: 2.0,
        }
    }
}

fn weekly_base_rate(slot: usize, day_rate: f64, night_rate: f64) -> f64 {
    let day = (slot / 48) % 7; // 0 = Sunday
    let hour = (slot % 48) / 2;
    let weekday = (1..=5).contains(&day);
    let scale = if weekday { 1.0 } else { 0.25 };
    if (8..18).contains(&hour) {
        scale * day_rate
    } else if (6..8).contains(&hour) || (18..22).contains(&hour) {
        scale * 0.3 * day_rate + night_rate
    } else {
        night_rate
    }
}

pub fn synthetic_event_series(
    spec: &SyntheticEventSpec,
) -> (Vec<[f64; 2]>, Vec<(usize, usize)>) {
    let total = spec.weeks * WEEK_SLOTS;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let draw = |rate: f64, rng: &mut ChaCha8Rng| -> f64 {
        if rate <= 0.0 {
            0.0
        } else {
            rng.sample(Poisson::new(rate).expect("positive rate")).round()
        }
    };
    let mut counts = vec![[0.0f64; 2]; total];
    for (i, c) in counts.iter_mut().enumerate() {
        let rate = weekly_base_rate(i % WEEK_SLOTS, spec.day_rate, spec.night_rate);
        c[0] = draw(rate, &mut rng);
        c[1] = draw(rate, &mut rng);
        if rng.gen_bool(spec.spike_prob) {
            let boost = draw(spec.spike_scale * rate + 2.0, &mut rng);
            c[if rng.gen_bool(0.5) { 0 } else { 1 }] += boost;
        }
    }

    // Non-overlapping events in daytime-ish slots. Subtle events sit in
    // working hours where the base noise hides their per-slot deviation.
    let mut truth: Vec<(usize, usize)> = Vec::new();
    let mut guard = 0usize;
    while truth.len() < spec.n_events && guard < 100_000 {
        guard += 1;
        let subtle = rng.gen_bool(spec.subtle_fraction);
        let (len_range, boost_range, hours) = if subtle {
            (spec.subtle_len_range, spec.subtle_boost_range, 9..17)
        } else {
            (spec.event_len_range, spec.event_boost_range, 7..20)
        };
        let len = rng.gen_range(len_range.0..=len_range.1);
        let start = rng.gen_range(0..total.saturating_sub(len));
        let hour = (start % 48) / 2;
        let day = (start / 48) % 7;
        if !hours.contains(&hour) || !(1..=5).contains(&day) {
            continue;
        }
        // Keep a 4-slot buffer between events.
        if truth.iter().any(|&(s, e)| start < e + 4 && s < start + len + 4) {
            continue;
        }
        let boost = rng.gen_range(boost_range.0..boost_range.1);
        // Every event slot gets a floor of two extra people in each
        // direction, so even the weakest event leaves a footprint above the
        // slot medians.
        for c in counts.iter_mut().skip(start).take(len) {
            c[0] += 2.0 + draw(boost, &mut rng);
            c[1] += 2.0 + draw(boost, &mut rng);
        }
        truth.push((start, start + len));
    }
    truth.sort_unstable();
    (counts, truth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::Timelike;
    use std::io::Write;

    #[test]
    fn constant_series_detrends_to_zero() {
        let counts = vec![[5.0, 3.0]; 3 * 8];
        let d = detrend_series(&counts, 8);
        assert!(d.xbar.iter().all(|x| x[0] == 0.0 && x[1] == 0.0));
        assert!(d.medians.iter().all(|m| m == &[5.0, 3.0]));
    }

    #[test]
    fn exactly_periodic_series_detrends_to_zero() {
        let period = 6;
        let mut counts = Vec::new();
        for week in 0..5 {
            let _ = week;
            for slot in 0..period {
                counts.push([slot as f64, 2.0 * slot as f64]);
            }
        }
        let d = detrend_series(&counts, period);
        assert!(d.xbar.iter().all(|x| x[0] == 0.0 && x[1] == 0.0));
    }

    #[test]
    fn single_spike_survives_detrending() {
        let period = 4;
        let mut counts = vec![[1.0, 1.0]; 5 * period];
        counts[9] = [8.0, 6.0];
        let d = detrend_series(&counts, period);
        for (i, x) in d.xbar.iter().enumerate() {
            if i == 9 {
                assert_eq!(*x, [7.0, 5.0]);
            } else {
                assert_eq!(*x, [0.0, 0.0]);
            }
        }
    }

    #[test]
    fn chain_graph_shape() {
        let xbar = vec![[0.0, 0.0]; 10];
        let g = chain_event_graph(&xbar, 0.5).unwrap();
        assert_eq!(g.node_count(), 10);
        assert_eq!(g.edge_count(), 9);
        assert_eq!(g.dim(), 2);
    }

    #[test]
    fn detect_events_runs() {
        let mut x = VectorList::zeros(8, 2);
        // all-zero: no events
        assert!(detect_events(&x, 1).is_empty());
        // single positive slot with k_min 1
        x.row_mut(3)[0] = 1.0;
        assert_eq!(detect_events(&x, 1), vec![(3, 4)]);
        // same with k_min 2: too short
        assert!(detect_events(&x, 2).is_empty());
        // alternating signs never form a run of two
        let mut alt = VectorList::zeros(6, 2);
        for i in 0..6 {
            alt.row_mut(i)[0] = if i % 2 == 0 { 1.0 } else { -1.0 };
        }
        assert!(detect_events(&alt, 2).is_empty());
        // sustained run
        let mut run = VectorList::zeros(6, 2);
        for i in 1..4 {
            run.row_mut(i)[1] = 0.5;
        }
        assert_eq!(detect_events(&run, 2), vec![(1, 4)]);
    }

    #[test]
    fn poisson_baseline_hand_checked_pmf() {
        // lambda_in = lambda_out = 1, N = 5 each: pmf = (e^-1/120)^2 ~ 9.4e-6.
        let p = (-1.0f64).exp() / 120.0;
        let joint = p * p;
        assert!((joint - 9.4e-6).abs() < 1e-7);
        // Build a series with rate-1 slots and one (5,5) anomaly pair. The
        // anomaly inflates its own slot means to 13/9, putting the joint
        // pmf there near 1.5e-4; ordinary slots sit around 0.12.
        let period = 4;
        let mut counts = vec![[1.0, 1.0]; period * 9];
        counts[13] = [5.0, 5.0];
        counts[14] = [5.0, 5.0];
        let events = poisson_baseline(&counts, period, 1e-3, 2);
        assert_eq!(events, vec![(13, 15)]);
        // A tighter threshold hides it.
        assert!(poisson_baseline(&counts, period, 1e-12, 2).is_empty());
    }

    #[test]
    fn poisson_baseline_constant_series_never_fires() {
        let counts = vec![[2.0, 2.0]; 20];
        for eps in [0.9, 0.5, 1e-3] {
            assert!(poisson_baseline(&counts, 4, eps, 1).is_empty());
        }
    }

    #[test]
    fn poisson_zero_rate_zero_count_never_below_threshold() {
        // pmf(0 | rate 0) = 1, never below any eps < 1.
        let counts = vec![[0.0, 0.0]; 12];
        assert!(poisson_baseline(&counts, 4, 0.5, 1).is_empty());
    }

    #[test]
    fn match_events_overlap_rules() {
        let truth = vec![(0, 4), (10, 12), (20, 25)];
        assert_eq!(match_events(&truth.clone(), &truth), 3);
        assert_eq!(match_events(&[(40, 44)], &truth), 0);
        // One prediction spanning two truths counts both.
        assert_eq!(match_events(&[(3, 11)], &truth), 2);
        // Each truth counted once even with many hits.
        assert_eq!(match_events(&[(0, 1), (1, 2), (2, 3)], &truth), 1);
    }

    #[test]
    fn calit2_loader_round_trip() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        for (flow, date, time, count) in [
            (7, "07/24/05", "00:00:00", 0),
            (9, "07/24/05", "00:00:00", 2),
            (7, "07/24/05", "00:30:00", 1),
            (9, "07/24/05", "00:30:00", 4),
            (7, "07/24/05", "01:00:00", 3),
            (9, "07/24/05", "01:00:00", 0),
        ] {
            writeln!(file, "{flow},{date},{time},{count}").unwrap();
        }
        let (counts, start) = load_calit2_counts(file.path()).unwrap();
        assert_eq!(counts.len(), 3);
        assert_eq!(counts[0], [2.0, 0.0]);
        assert_eq!(counts[1], [4.0, 1.0]);
        assert_eq!(counts[2], [0.0, 3.0]);
        assert_eq!(start.time().hour(), 0);

        let mut ev = tempfile::NamedTempFile::new().unwrap();
        writeln!(ev, "07/24/05,00:30:00,01:00:00,demo").unwrap();
        let events = load_event_list(ev.path(), start, counts.len()).unwrap();
        assert_eq!(events, vec![(1, 2)]);
    }

    #[test]
    fn synthetic_series_reproducible_and_truthful() {
        let spec = SyntheticEventSpec { weeks: 3, n_events: 5, seed: 11, ..Default::default() };
        let (a, truth_a) = synthetic_event_series(&spec);
        let (b, truth_b) = synthetic_event_series(&spec);
        assert_eq!(a, b);
        assert_eq!(truth_a, truth_b);
        assert_eq!(truth_a.len(), 5);
        assert_eq!(a.len(), 3 * WEEK_SLOTS);
        for pair in truth_a.windows(2) {
            assert!(pair[0].1 + 4 <= pair[1].0, "events must not touch");
        }
    }
}
