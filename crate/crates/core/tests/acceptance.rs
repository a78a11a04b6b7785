//! Acceptance criteria 1-10. Runs as a plain binary so each criterion prints
//! exactly one PASS/FAIL line; exits non-zero if any fails.

use std::collections::BTreeSet;
use std::path::Path;
use std::time::Instant;

use chatfuzz::campaign::{paired_trials, run_ablation, run_campaign, run_sweep, Baseline, CampaignConfig, SweepConfig};
use chatfuzz::corpus::{import_ratio, read_dir_sorted, QueueStats, QUEUE_DIR};
use chatfuzz::coverage::{cmin, coverage_improvement, EdgeId};
use chatfuzz::harness::{default_seeds, list_targets, lookup, TargetHarness, Verdict};
use chatfuzz::metrics::{median, rank_row};
use chatfuzz::mutate::chat::{build_prompt, Endpoint, PromptText, PromptVariant};
use chatfuzz::mutate::havoc;
use chatfuzz::providers::mock::MockProvider;
use chatfuzz::validate::xml::{self, XmlRule, XmlViolation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TRIAL_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

type Verdict_ = Result<String, String>;

fn check(ok: bool, detail: String) -> Verdict_ {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c1_metric_arithmetic() -> Verdict_ {
    let cov = coverage_improvement(7687, 9555).map_err(|e| e.to_string())? * 100.0;
    let imp = import_ratio(QueueStats {
        queue_len: 1856,
        imported_from_ai: 348,
    })
    .map_err(|e| e.to_string())?
        * 100.0;
    check(
        (cov - 24.30).abs() <= 0.01 && (imp - 18.75).abs() <= 0.01,
        format!("improvement {cov:.4}%, import ratio {imp:.4}%"),
    )
}

fn c2_prompt_fidelity() -> Verdict_ {
    let sample = b"<doc>\n  <a>1</a>\n</doc>";
    let s = std::str::from_utf8(sample).unwrap();
    let expected: [(PromptVariant, Endpoint, Option<&str>, String); 6] = [
        (PromptVariant::Ai, Endpoint::Chat, Some("You are a xml file generator"), format!("Here is an example xml file, generate another one.\n{s}")),
        (PromptVariant::Ai, Endpoint::Completion, None, format!("{s}\nAnd here is another xml file like above: ")),
        (PromptVariant::AiNoInput, Endpoint::Chat, Some("You are a xml file generator"), "Generate a xml file.".to_string()),
        (PromptVariant::AiNoInput, Endpoint::Completion, None, "Here is a xml file: ".to_string()),
        (PromptVariant::AiNoForm, Endpoint::Chat, Some("You are a file generator"), format!("Here is an example file, generate another one.\n{s}")),
        (PromptVariant::AiNoForm, Endpoint::Completion, None, format!("{s}\nAnd here is another one like above: ")),
    ];
    let mut matched = 0;
    for (variant, endpoint, system, text) in &expected {
        let sample = variant.takes_sample().then_some(&sample[..]);
        let p = build_prompt(*variant, *endpoint, "xml", sample).map_err(|e| e.to_string())?;
        let ok = match (&p.text, system) {
            (PromptText::Chat { system: sys, user }, Some(want)) => sys.as_bytes() == want.as_bytes() && user.as_bytes() == text.as_bytes(),
            (PromptText::Completion { prompt }, None) => prompt.as_bytes() == text.as_bytes(),
            _ => false,
        };
        if !ok {
            return Err(format!("{variant}/{endpoint} rendered {:?}", p.text));
        }
        matched += 1;
    }
    check(matched == 6, format!("{matched}/6 renderings byte-identical"))
}

const SAMPLE_INPUT: &str = "<doc>
  <clean> </clean>
  <dirty> A B </dirty>
  <mixed>
     A
     <clean> </clean>
     B
     <dirty> A B </dirty>
     C
  </mixed>
</doc>";

const RESPONSE_1: &str = "<doc>
  <clean> </clean>
  <dirty> X Y Z </dirty>
  <mixed>
    X
    <clean> </clean>
    Y
    <dirty> X Y Z </dirty>
    Z
  </mixed>
</doc>";

const RESPONSE_2: &str = r#"<?xml version="1.0" encoding="UTF-8"?>
<books>
  <book>
    <title>The Great Gatsby</title>
    <author>F. Scott Fitzgerald</author>
    <genre>Drama</genre>
  </book>
  <book>
    <title>Pride and Prejudice</title>
    <author>Jane Austen</author>
    <genre>Romance</genre>
  </book>
</books>"#;

fn c3_xml_oracle() -> Verdict_ {
    for doc in [SAMPLE_INPUT, RESPONSE_1, RESPONSE_2] {
        if let Err(e) = xml::parse(doc.as_bytes()) {
            return Err(format!("fixture rejected: {e}"));
        }
    }
    let fixtures = [
        ("<a><b></b>", XmlRule::ClosingTag),
        ("<Note></note>", XmlRule::CaseSensitive),
        ("<b><i></b></i>", XmlRule::ProperNesting),
        ("<a></a><b></b>", XmlRule::SingleRoot),
        ("<a x=1></a>", XmlRule::QuotedAttribute),
    ];
    for (src, rule) in fixtures {
        match xml::parse(src.as_bytes()) {
            Err(e) if e.violation == XmlViolation::Rule(rule) => {}
            other => return Err(format!("{src:?}: expected {rule:?}, got {other:?}")),
        }
    }
    Ok("3 fixtures valid, 5/5 rule fixtures attributed".into())
}

fn edges_of(h: &TargetHarness, inputs: &[Vec<u8>]) -> Vec<(BTreeSet<EdgeId>, bool)> {
    inputs
        .iter()
        .map(|s| {
            let r = h.run(s).expect("toy targets accept any input");
            (r.trace.edge_set(), r.verdict == Verdict::Crash)
        })
        .collect()
}

/// Reference: crashes first, then largest edge sets, keeping any that add an id.
fn greedy_reference(sets: &[(BTreeSet<EdgeId>, bool)]) -> usize {
    let mut seen: BTreeSet<EdgeId> = BTreeSet::new();
    let mut kept = 0;
    for (s, _) in sets.iter().filter(|(_, c)| *c) {
        seen.extend(s);
        kept += 1;
    }
    let mut rest: Vec<(usize, &BTreeSet<EdgeId>)> = sets.iter().enumerate().filter(|(_, (_, c))| !*c).map(|(i, (s, _))| (i, s)).collect();
    rest.sort_by_key(|&(i, s)| (std::cmp::Reverse(s.len()), i));
    for (_, s) in rest {
        if !s.is_subset(&seen) {
            seen.extend(s);
            kept += 1;
        }
    }
    kept
}

fn c4_cmin_oracle() -> Verdict_ {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let targets: Vec<(TargetHarness, Vec<Vec<u8>>)> = list_targets()
        .into_iter()
        .map(|t| (lookup(t.name).unwrap(), default_seeds(t.name).unwrap()))
        .collect();
    for round in 0..200 {
        let (h, pool) = &targets[round % targets.len()];
        let size = rng.random_range(1..=10);
        let corpus: Vec<Vec<u8>> = (0..size)
            .map(|_| {
                let base = &pool[rng.random_range(0..pool.len())];
                match rng.random_range(0..3) {
                    0 => base.clone(),
                    _ => havoc(base, &mut rng, &[], None, 512),
                }
            })
            .collect();
        let sets = edges_of(h, &corpus);
        let kept = cmin(&corpus, h).map_err(|e| e.to_string())?;
        let union = |idx: &mut dyn Iterator<Item = usize>| idx.flat_map(|i| sets[i].0.iter().copied()).collect::<BTreeSet<_>>();
        if union(&mut kept.iter().copied()) != union(&mut (0..corpus.len())) {
            return Err(format!("round {round}: edge union not preserved"));
        }
        let reference = greedy_reference(&sets);
        if kept.len() != reference {
            return Err(format!("round {round}: kept {} seeds, reference {reference}", kept.len()));
        }
    }
    Ok("200 corpora: unions preserved, sizes match reference".into())
}

fn c5_sweep() -> Verdict_ {
    let cfg = SweepConfig::new("toy-xml");
    let report = run_sweep(&cfg, &MockProvider::new()).map_err(|e| e.to_string())?;
    let cells = &report.cells;
    let unique: Vec<f64> = cells.iter().map(|c| c.unique_ratio).collect();
    let valid: Vec<f64> = cells.iter().map(|c| c.valid_ratio).collect();
    let cov: Vec<f64> = cells.iter().map(|c| c.cov_improvement).collect();
    let best = cov.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).unwrap();
    let argmax = cells[best].temperature;
    let ok = cells.len() == 9
        && unique.windows(2).all(|w| w[0] <= w[1])
        && valid.windows(2).all(|w| w[0] >= w[1])
        && argmax > 0.0
        && argmax < 2.0;
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ");
    check(
        ok,
        format!("unique [{}] valid [{}] cov [{}] argmax t={argmax:.2}", fmt(&unique), fmt(&valid), fmt(&cov)),
    )
}

fn c6_ablation(root: &Path) -> Verdict_ {
    let mut details = Vec::new();
    let mut ok = true;
    for target in ["toy-xml", "toy-script"] {
        let mut ai = Vec::new();
        let mut no_input = Vec::new();
        for seed in TRIAL_SEEDS {
            let mut base = CampaignConfig::new(target, &root.join(format!("{target}-{seed}")));
            base.rng_seed = seed;
            let rows = run_ablation(&base, Endpoint::Completion).map_err(|e| e.to_string())?;
            ai.push(rows[0].edges as f64);
            no_input.push(rows[1].edges as f64);
        }
        let (m_ai, m_ni) = (median(&ai).unwrap(), median(&no_input).unwrap());
        ok &= m_ai >= m_ni;
        details.push(format!("{target}: median AI {m_ai} vs AI_noINPUT {m_ni}"));
    }
    check(ok, details.join("; "))
}

struct Paired {
    edges_wins: usize,
    valid_wins: usize,
    import_ratios: Vec<f64>,
    summary: String,
}

fn paired(target: &str, root: &Path) -> Result<Paired, String> {
    let base = CampaignConfig::new(target, root);
    let trials = paired_trials(&base, &[Baseline::AflOnly, Baseline::ChatFuzz], &TRIAL_SEEDS).map_err(|e| e.to_string())?;
    let mut p = Paired {
        edges_wins: 0,
        valid_wins: 0,
        import_ratios: Vec::new(),
        summary: String::new(),
    };
    let mut cells = Vec::new();
    for t in &trials {
        let (afl, cf) = (&t[0], &t[1]);
        p.edges_wins += usize::from(cf.edges > afl.edges);
        p.valid_wins += usize::from(cf.valid_ratio_queue > afl.valid_ratio_queue);
        p.import_ratios.push(import_ratio(cf.stats).unwrap_or(0.0));
        cells.push(format!(
            "{}/{} edges, {:.2}/{:.2} valid",
            cf.edges, afl.edges, cf.valid_ratio_queue, afl.valid_ratio_queue
        ));
    }
    p.summary = cells.join("; ");
    Ok(p)
}

fn c7_uplift(root: &Path) -> Verdict_ {
    let p = paired("toy-xml", root)?;
    check(
        p.edges_wins >= 4 && p.valid_wins >= 4,
        format!("edges won {}/5, queue validity won {}/5 [ChatFuzz/AFL++: {}]", p.edges_wins, p.valid_wins, p.summary),
    )
}

fn c8_checksum(root: &Path) -> Verdict_ {
    let p = paired("toy-checksum", root)?;
    let worst = p.import_ratios.iter().cloned().fold(0.0, f64::max);
    check(
        worst < 0.05,
        format!("max import ratio {:.2}% [ChatFuzz/AFL++: {}]", worst * 100.0, p.summary),
    )
}

fn brute_ranks(m: &[Vec<f64>]) -> Vec<f64> {
    let cols = m[0].len();
    (0..cols)
        .map(|j| {
            let total: f64 = m
                .iter()
                .map(|row| {
                    let greater = row.iter().filter(|&&v| v > row[j]).count() as f64;
                    let equal = row.iter().filter(|&&v| v == row[j]).count() as f64;
                    greater + (equal + 1.0) / 2.0
                })
                .sum();
            total / m.len() as f64
        })
        .collect()
}

fn c9_ranks() -> Verdict_ {
    let m: Vec<Vec<f64>> = vec![
        vec![0.00, 0.05, 0.12, 0.18, 0.22, 0.31, 0.27, 0.10, 0.02],
        vec![0.01, 0.04, 0.09, 0.15, 0.15, 0.20, 0.24, 0.08, 0.03],
        vec![0.00, 0.02, 0.06, 0.11, 0.19, 0.17, 0.13, 0.07, 0.01],
        vec![0.03, 0.08, 0.14, 0.21, 0.26, 0.25, 0.16, 0.05, 0.00],
    ];
    let got = rank_row(&m).map_err(|e| e.to_string())?;
    let want = brute_ranks(&m);
    let squared: Vec<Vec<f64>> = m.iter().map(|r| r.iter().map(|v| v * v).collect()).collect();
    let got_sq = rank_row(&squared).map_err(|e| e.to_string())?;
    let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12);
    check(
        close(&got, &want) && close(&got, &got_sq),
        format!("ranks {}", got.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>().join(" ")),
    )
}

fn queue_fingerprint(dir: &Path) -> Vec<(String, Vec<u8>)> {
    read_dir_sorted(&dir.join(QUEUE_DIR)).unwrap()
}

fn c10_determinism(root: &Path) -> Verdict_ {
    let mut digests = Vec::new();
    let mut queues = Vec::new();
    for run in ["a", "b"] {
        let mut cfg = CampaignConfig::new("toy-xml", &root.join(run));
        cfg.baseline = Baseline::ChatFuzzC;
        cfg.rng_seed = 10;
        let r = run_campaign(&cfg).map_err(|e| e.to_string())?;
        digests.push(r.digest());
        queues.push(queue_fingerprint(&cfg.out_dir));
    }
    check(
        digests[0] == digests[1] && queues[0] == queues[1],
        format!("report digest {} ({} queue files)", digests[0], queues[0].len()),
    )
}

fn main() {
    let root = tempfile::tempdir().expect("temp dir");
    let r = root.path();
    let criteria: Vec<(&str, Box<dyn Fn() -> Verdict_>)> = vec![
        ("metric arithmetic", Box::new(c1_metric_arithmetic)),
        ("prompt fidelity", Box::new(c2_prompt_fidelity)),
        ("xml oracle fixtures", Box::new(c3_xml_oracle)),
        ("cmin oracle equivalence", Box::new(c4_cmin_oracle)),
        ("temperature sweep direction", Box::new(c5_sweep)),
        ("ablation direction", Box::new(|| c6_ablation(&r.join("c6")))),
        ("end-to-end uplift", Box::new(|| c7_uplift(&r.join("c7")))),
        ("checksum contrast", Box::new(|| c8_checksum(&r.join("c8")))),
        ("rank-table math", Box::new(c9_ranks)),
        ("determinism", Box::new(|| c10_determinism(&r.join("c10")))),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("criterion {:>2} {name}: PASS ({secs:.1}s) {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({secs:.1}s) {d}", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
