//! Artifact persistence: frame directories, coefficient trees, net/cubature
//! tables, and report files.  Everything is plain text — CSV with 17
//! significant digits for numeric tables, a key/value manifest for frame
//! metadata, JSON for check reports — and every writer is deterministic so
//! identical inputs produce byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::frames::{CoefficientTree, FrameElement, FrameKind, FramePair, FrameSide};
use crate::jacobi::JacobiSetting;
use crate::nets::{CubatureRule, NetLevel};

/// Formats one float with 17 significant digits, the shortest width that
/// round-trips every f64 bit pattern through decimal.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Artifact(format!("bad float for {what}: {s:?}")))
}

fn parse_usize(s: &str, what: &str) -> Result<usize> {
    s.trim()
        .parse::<usize>()
        .map_err(|_| Error::Artifact(format!("bad integer for {what}: {s:?}")))
}

/// 64-bit FNV-1a over a byte stream; used to version artifacts by content.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h = (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

// ---------------------------------------------------------------------------
// Net / cubature tables
// ---------------------------------------------------------------------------

/// Net-with-weights CSV body: `theta,cell_lo,cell_hi,cell_measure,weight`
/// per center.  Used both for standalone cubature rules and for the
/// per-level tables of a frame directory.
pub fn net_csv(net: &NetLevel, weights: &[f64]) -> Result<String> {
    if weights.len() != net.len() {
        return Err(Error::Shape(format!(
            "{} weights for {} centers",
            weights.len(),
            net.len()
        )));
    }
    let mut out = String::from("theta,cell_lo,cell_hi,cell_measure,weight\n");
    for i in 0..net.len() {
        let (lo, hi) = net.cell_bounds()[i];
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt_f64(net.centers()[i]),
            fmt_f64(lo),
            fmt_f64(hi),
            fmt_f64(net.cell_measures()[i]),
            fmt_f64(weights[i]),
        );
    }
    Ok(out)
}

/// Parses a net table written by [`net_csv`]; `delta` is carried by the
/// surrounding manifest, not the table.
pub fn parse_net_csv(text: &str, delta: f64) -> Result<(NetLevel, Vec<f64>)> {
    let mut centers = Vec::new();
    let mut bounds = Vec::new();
    let mut measures = Vec::new();
    let mut weights = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        if ln == 0 {
            if line.trim() != "theta,cell_lo,cell_hi,cell_measure,weight" {
                return Err(Error::Artifact(format!("unexpected net header: {line:?}")));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            return Err(Error::Artifact(format!(
                "net row {ln} has {} columns, expected 5",
                cols.len()
            )));
        }
        centers.push(parse_f64(cols[0], "theta")?);
        bounds.push((parse_f64(cols[1], "cell_lo")?, parse_f64(cols[2], "cell_hi")?));
        measures.push(parse_f64(cols[3], "cell_measure")?);
        weights.push(parse_f64(cols[4], "weight")?);
    }
    Ok((NetLevel::from_parts(delta, centers, bounds, measures)?, weights))
}

/// Writes a cubature rule as one CSV file (net columns plus weights); the
/// exactness degree and delta ride in a comment-free side file would be
/// overkill, so they go in the filename-independent header row of the
/// manifest when part of a frame, and callers keep them otherwise.
pub fn save_cubature_csv(rule: &CubatureRule, path: &Path) -> Result<()> {
    fs::write(path, net_csv(rule.net(), rule.weights())?)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Frame directories
// ---------------------------------------------------------------------------

/// Everything the manifest records beyond the pair itself.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameManifest {
    pub kind: FrameKind,
    pub b: f64,
    pub j_max: usize,
    pub gamma: f64,
    pub epsilon: Option<f64>,
    pub sigma: Option<f64>,
    pub alpha: f64,
    pub beta: f64,
    /// `(degree_exact, r_norm, neumann_terms)` per level, as certified at
    /// build time.
    pub level_certs: Vec<(Option<usize>, Option<f64>, Option<usize>)>,
    /// FNV-1a 64 over the concatenated table files, in write order.
    pub content_hash: u64,
}

fn element_csv(elements: &[FrameElement]) -> String {
    let mut out = String::from("level,center,degree,coefficient\n");
    for e in elements {
        for (i, &c) in e.band().iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                e.level(),
                fmt_f64(e.center()),
                e.k_lo() + i,
                fmt_f64(c),
            );
        }
    }
    out
}

fn parse_element_csv(text: &str, weights_by_level: &[Vec<f64>]) -> Result<Vec<Vec<FrameElement>>> {
    // Accumulate (level, center, degree, coefficient) runs: a new element
    // starts whenever the degree stops increasing or the center changes.
    let mut by_level: Vec<Vec<FrameElement>> = vec![Vec::new(); weights_by_level.len()];
    let mut current: Option<(usize, f64, usize, Vec<f64>)> = None;
    let flush = |cur: &mut Option<(usize, f64, usize, Vec<f64>)>,
                     by_level: &mut Vec<Vec<FrameElement>>|
     -> Result<()> {
        if let Some((level, center, k_lo, band)) = cur.take() {
            let idx = by_level
                .get(level)
                .map(|v| v.len())
                .ok_or_else(|| Error::Artifact(format!("element at level {level} beyond manifest levels")))?;
            let w = weights_by_level[level].get(idx).copied().ok_or_else(|| {
                Error::Artifact(format!("more elements than centers at level {level}"))
            })?;
            by_level[level].push(FrameElement::from_parts(level, center, w.sqrt(), k_lo, band));
        }
        Ok(())
    };
    for (ln, line) in text.lines().enumerate() {
        if ln == 0 {
            if line.trim() != "level,center,degree,coefficient" {
                return Err(Error::Artifact(format!("unexpected element header: {line:?}")));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(Error::Artifact(format!(
                "element row {ln} has {} columns, expected 4",
                cols.len()
            )));
        }
        let level = parse_usize(cols[0], "level")?;
        let center = parse_f64(cols[1], "center")?;
        let degree = parse_usize(cols[2], "degree")?;
        let coeff = parse_f64(cols[3], "coefficient")?;
        let extends = matches!(
            &current,
            Some((l, c, k_lo, band))
                if *l == level && *c == center && degree == k_lo + band.len()
        );
        if extends {
            if let Some((_, _, _, band)) = &mut current {
                band.push(coeff);
            }
        } else {
            flush(&mut current, &mut by_level)?;
            current = Some((level, center, degree, vec![coeff]));
        }
    }
    flush(&mut current, &mut by_level)?;
    Ok(by_level)
}

fn opt_f64(v: Option<f64>) -> String {
    v.map_or_else(|| "none".into(), fmt_f64)
}

fn opt_usize(v: Option<usize>) -> String {
    v.map_or_else(|| "none".into(), |n| n.to_string())
}

fn parse_opt_f64(s: &str, what: &str) -> Result<Option<f64>> {
    if s.trim() == "none" {
        Ok(None)
    } else {
        parse_f64(s, what).map(Some)
    }
}

fn parse_opt_usize(s: &str, what: &str) -> Result<Option<usize>> {
    if s.trim() == "none" {
        Ok(None)
    } else {
        parse_usize(s, what).map(Some)
    }
}

fn level_file(j: usize) -> String {
    format!("level_{j:02}.csv")
}

/// Writes a frame pair into `dir` (created if absent): one net/weights CSV
/// per level, element tables for both families, and `manifest.txt` with the
/// construction parameters, per-level certification results, and the
/// content hash of the tables.  Refuses to overwrite an existing manifest:
/// frame directories are immutable once written.
pub fn save_frame(setting: &JacobiSetting, pair: &FramePair, dir: &Path) -> Result<FrameManifest> {
    fs::create_dir_all(dir)?;
    let manifest_path = dir.join("manifest.txt");
    if manifest_path.exists() {
        return Err(Error::Artifact(format!(
            "refusing to overwrite existing frame directory {}",
            dir.display()
        )));
    }

    let mut hashed: Vec<u8> = Vec::new();
    let write_table = |name: String, body: String, hashed: &mut Vec<u8>| -> Result<()> {
        hashed.extend_from_slice(name.as_bytes());
        hashed.push(b'\n');
        hashed.extend_from_slice(body.as_bytes());
        fs::write(dir.join(&name), body)?;
        Ok(())
    };

    for level in pair.levels() {
        write_table(level_file(level.j()), net_csv(level.net(), level.weights())?, &mut hashed)?;
    }
    let primal: Vec<FrameElement> = (0..=pair.j_max())
        .flat_map(|j| pair.elements(j, FrameSide::Primal).iter().cloned())
        .collect();
    write_table("elements.csv".into(), element_csv(&primal), &mut hashed)?;
    if pair.kind() != FrameKind::Tight {
        let dual: Vec<FrameElement> = (0..=pair.j_max())
            .flat_map(|j| pair.elements(j, FrameSide::Dual).iter().cloned())
            .collect();
        write_table("dual_elements.csv".into(), element_csv(&dual), &mut hashed)?;
    }

    let manifest = FrameManifest {
        kind: pair.kind(),
        b: pair.b(),
        j_max: pair.j_max(),
        gamma: pair.gamma(),
        epsilon: pair.epsilon(),
        sigma: pair.dual_sigma(),
        alpha: setting.alpha(),
        beta: setting.beta(),
        level_certs: pair
            .levels()
            .iter()
            .map(|l| (l.degree_exact(), l.r_norm(), l.neumann_terms()))
            .collect(),
        content_hash: fnv1a64(&hashed),
    };

    let mut text = String::from("format: frame-directory v1\n");
    let _ = writeln!(text, "kind: {}", manifest.kind.as_str());
    let _ = writeln!(text, "b: {}", fmt_f64(manifest.b));
    let _ = writeln!(text, "levels: {}", manifest.j_max);
    let _ = writeln!(text, "gamma: {}", fmt_f64(manifest.gamma));
    let _ = writeln!(text, "epsilon: {}", opt_f64(manifest.epsilon));
    let _ = writeln!(text, "sigma: {}", opt_f64(manifest.sigma));
    let _ = writeln!(text, "alpha: {}", fmt_f64(manifest.alpha));
    let _ = writeln!(text, "beta: {}", fmt_f64(manifest.beta));
    let _ = writeln!(text, "content_hash: fnv1a64:{:016x}", manifest.content_hash);
    for (j, (deg, r, terms)) in manifest.level_certs.iter().enumerate() {
        let _ = writeln!(
            text,
            "level {j}: delta={} degree_exact={} r_norm={} neumann_terms={}",
            fmt_f64(pair.levels()[j].net().delta()),
            opt_usize(*deg),
            opt_f64(*r),
            opt_usize(*terms),
        );
    }
    fs::write(manifest_path, text)?;
    Ok(manifest)
}

fn manifest_value<'a>(lines: &'a [(String, String)], key: &str) -> Result<&'a str> {
    lines
        .iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.as_str())
        .ok_or_else(|| Error::Artifact(format!("manifest missing key {key:?}")))
}

/// Reads a frame directory back into a pair plus its manifest, verifying
/// the recorded content hash against the table files.
pub fn load_frame(dir: &Path) -> Result<(FramePair, FrameManifest)> {
    let manifest_path = dir.join("manifest.txt");
    if !manifest_path.exists() {
        return Err(Error::Artifact(format!(
            "no frame directory at {} (manifest.txt missing)",
            dir.display()
        )));
    }
    let text = fs::read_to_string(&manifest_path)?;
    let mut kv: Vec<(String, String)> = Vec::new();
    let mut level_lines: Vec<(usize, String)> = Vec::new();
    for line in text.lines() {
        let Some((key, value)) = line.split_once(':') else {
            continue;
        };
        let key = key.trim();
        if let Some(j) = key.strip_prefix("level ") {
            level_lines.push((parse_usize(j, "level index")?, value.trim().to_string()));
        } else {
            kv.push((key.to_string(), value.trim().to_string()));
        }
    }
    if manifest_value(&kv, "format")? != "frame-directory v1" {
        return Err(Error::Artifact("unrecognized frame manifest format".into()));
    }
    let kind = FrameKind::parse(manifest_value(&kv, "kind")?)?;
    let b = parse_f64(manifest_value(&kv, "b")?, "b")?;
    let j_max = parse_usize(manifest_value(&kv, "levels")?, "levels")?;
    let gamma = parse_f64(manifest_value(&kv, "gamma")?, "gamma")?;
    let epsilon = parse_opt_f64(manifest_value(&kv, "epsilon")?, "epsilon")?;
    let sigma = parse_opt_f64(manifest_value(&kv, "sigma")?, "sigma")?;
    let alpha = parse_f64(manifest_value(&kv, "alpha")?, "alpha")?;
    let beta = parse_f64(manifest_value(&kv, "beta")?, "beta")?;
    let hash_text = manifest_value(&kv, "content_hash")?;
    let expect_hash = hash_text
        .strip_prefix("fnv1a64:")
        .and_then(|h| u64::from_str_radix(h, 16).ok())
        .ok_or_else(|| Error::Artifact(format!("bad content_hash: {hash_text:?}")))?;

    if level_lines.len() != j_max + 1 {
        return Err(Error::Artifact(format!(
            "manifest lists {} levels, expected {}",
            level_lines.len(),
            j_max + 1
        )));
    }
    level_lines.sort_by_key(|(j, _)| *j);

    // Per-level cert fields and deltas.
    let mut deltas = Vec::new();
    let mut certs = Vec::new();
    for (j, line) in &level_lines {
        let mut delta = None;
        let mut deg = None;
        let mut r = None;
        let mut terms = None;
        for field in line.split_whitespace() {
            let Some((k, v)) = field.split_once('=') else {
                return Err(Error::Artifact(format!("bad level field {field:?}")));
            };
            match k {
                "delta" => delta = Some(parse_f64(v, "delta")?),
                "degree_exact" => deg = parse_opt_usize(v, "degree_exact")?,
                "r_norm" => r = parse_opt_f64(v, "r_norm")?,
                "neumann_terms" => terms = parse_opt_usize(v, "neumann_terms")?,
                other => {
                    return Err(Error::Artifact(format!("unknown level field {other:?}")));
                }
            }
        }
        let delta =
            delta.ok_or_else(|| Error::Artifact(format!("level {j} line missing delta")))?;
        deltas.push(delta);
        certs.push((deg, r, terms));
    }

    // Tables, re-hashed in write order.
    let mut hashed: Vec<u8> = Vec::new();
    let read_table = |name: String, hashed: &mut Vec<u8>| -> Result<String> {
        let body = fs::read_to_string(dir.join(&name)).map_err(|_| {
            Error::Artifact(format!("frame table {name} missing in {}", dir.display()))
        })?;
        hashed.extend_from_slice(name.as_bytes());
        hashed.push(b'\n');
        hashed.extend_from_slice(body.as_bytes());
        Ok(body)
    };
    let mut nets = Vec::new();
    let mut weights_by_level = Vec::new();
    for (j, &delta) in deltas.iter().enumerate() {
        let (net, weights) = parse_net_csv(&read_table(level_file(j), &mut hashed)?, delta)?;
        nets.push(net);
        weights_by_level.push(weights);
    }
    let primal = parse_element_csv(&read_table("elements.csv".into(), &mut hashed)?, &weights_by_level)?;
    let dual = if kind == FrameKind::Tight {
        vec![Vec::new(); j_max + 1]
    } else {
        parse_element_csv(
            &read_table("dual_elements.csv".into(), &mut hashed)?,
            &weights_by_level,
        )?
    };
    let got_hash = fnv1a64(&hashed);
    if got_hash != expect_hash {
        return Err(Error::Artifact(format!(
            "content hash mismatch: manifest fnv1a64:{expect_hash:016x}, tables fnv1a64:{got_hash:016x}"
        )));
    }

    let levels: Vec<_> = nets
        .into_iter()
        .zip(weights_by_level)
        .zip(certs.iter())
        .zip(primal.into_iter().zip(dual))
        .map(|(((net, weights), &(deg, r, _terms)), (p, d))| (net, weights, deg, r, p, d))
        .collect();
    let pair = FramePair::from_parts(kind, b, j_max, gamma, epsilon, sigma, levels)?;
    let manifest = FrameManifest {
        kind,
        b,
        j_max,
        gamma,
        epsilon,
        sigma,
        alpha,
        beta,
        level_certs: certs,
        content_hash: expect_hash,
    };
    Ok((pair, manifest))
}

// ---------------------------------------------------------------------------
// Coefficient trees
// ---------------------------------------------------------------------------

/// Coefficient tree CSV body: `level,center,re,im` per coefficient, centers
/// taken from the frame geometry.
pub fn tree_csv(tree: &CoefficientTree, pair: &FramePair) -> Result<String> {
    tree.check_shape(pair)?;
    let mut out = String::from("level,center,re,im\n");
    for j in 0..tree.n_levels() {
        let centers = pair.levels()[j].net().centers();
        for (c, a) in centers.iter().zip(tree.level(j)) {
            let _ = writeln!(out, "{j},{},{},{}", fmt_f64(*c), fmt_f64(a.re), fmt_f64(a.im));
        }
    }
    Ok(out)
}

pub fn save_tree(tree: &CoefficientTree, pair: &FramePair, path: &Path) -> Result<()> {
    fs::write(path, tree_csv(tree, pair)?)?;
    Ok(())
}

/// Reads a coefficient tree written by [`save_tree`] and checks it against
/// the frame geometry (level count, per-level length, matching centers).
pub fn load_tree(path: &Path, pair: &FramePair) -> Result<CoefficientTree> {
    if !path.exists() {
        return Err(Error::Artifact(format!("no coefficient file at {}", path.display())));
    }
    let text = fs::read_to_string(path)?;
    let mut levels: Vec<Vec<nalgebra::Complex<f64>>> = vec![Vec::new(); pair.j_max() + 1];
    for (ln, line) in text.lines().enumerate() {
        if ln == 0 {
            if line.trim() != "level,center,re,im" {
                return Err(Error::Artifact(format!("unexpected tree header: {line:?}")));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(Error::Artifact(format!(
                "tree row {ln} has {} columns, expected 4",
                cols.len()
            )));
        }
        let j = parse_usize(cols[0], "level")?;
        if j >= levels.len() {
            return Err(Error::Shape(format!(
                "tree level {j} beyond frame top {}",
                pair.j_max()
            )));
        }
        let center = parse_f64(cols[1], "center")?;
        let idx = levels[j].len();
        let expect = pair.levels()[j].net().centers().get(idx).copied();
        if expect != Some(center) {
            return Err(Error::Shape(format!(
                "tree center mismatch at level {j} index {idx}: file has {center}, frame has {expect:?}"
            )));
        }
        levels[j].push(nalgebra::Complex::new(
            parse_f64(cols[2], "re")?,
            parse_f64(cols[3], "im")?,
        ));
    }
    let tree = CoefficientTree::new(levels);
    tree.check_shape(pair)?;
    Ok(tree)
}

// ---------------------------------------------------------------------------
// Raw coefficient vectors
// ---------------------------------------------------------------------------

/// Coefficient-vector CSV body: `degree,coefficient` per row, degrees in
/// increasing order from zero.
pub fn spectral_csv(f: &crate::spectral::SpectralVector) -> String {
    let mut out = String::from("degree,coefficient\n");
    for (k, &c) in f.coeffs().iter().enumerate() {
        let _ = writeln!(out, "{k},{}", fmt_f64(c));
    }
    out
}

/// Parses a coefficient vector written by [`spectral_csv`].
pub fn parse_spectral_csv(text: &str) -> Result<crate::spectral::SpectralVector> {
    let mut coeffs: Vec<f64> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        if ln == 0 {
            if line.trim() != "degree,coefficient" {
                return Err(Error::Artifact(format!(
                    "unexpected coefficient header: {line:?}"
                )));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 2 {
            return Err(Error::Artifact(format!(
                "coefficient row {ln} has {} columns, expected 2",
                cols.len()
            )));
        }
        let k = parse_usize(cols[0], "degree")?;
        if k != coeffs.len() {
            return Err(Error::Artifact(format!(
                "coefficient degrees must increase from zero (row {ln} has degree {k})"
            )));
        }
        coeffs.push(parse_f64(cols[1], "coefficient")?);
    }
    Ok(crate::spectral::SpectralVector::new(coeffs))
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

/// One verification record: what was checked, with which parameters, what
/// came out, and whether it passed.
#[derive(Clone, Debug, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub parameters: serde_json::Value,
    pub realized: serde_json::Value,
    pub pass: bool,
}

/// Serializes check records as a stable, human-readable JSON array.
pub fn checks_json(checks: &[CheckRecord]) -> String {
    let mut s = serde_json::to_string_pretty(checks).expect("static shape");
    s.push('\n');
    s
}

/// Norm-report CSV body: `id`, the four norms, and the six pairwise ratios
/// per corpus member.
pub fn norm_report_csv(rows: &[(String, crate::besov::NormReport)]) -> String {
    let mut out = String::from(
        "id,lp_norm,heat_norm,seq_norm,approx_norm,\
         heat_over_lp,seq_over_lp,approx_over_lp,seq_over_heat,approx_over_heat,approx_over_seq\n",
    );
    for (id, r) in rows {
        let mut line = format!(
            "{id},{},{},{},{}",
            fmt_f64(r.lp_norm),
            fmt_f64(r.heat_norm),
            fmt_f64(r.seq_norm),
            fmt_f64(r.approx_norm),
        );
        for (_, ratio) in r.ratios() {
            let _ = write!(line, ",{}", fmt_f64(ratio));
        }
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// Combined norm-report CSV over several parameter triples: the
/// [`norm_report_csv`] columns prefixed by the `(s, p, q)` each row was
/// measured under, one block per sweep in the given order.
pub fn equivalence_csv(reports: &[crate::besov::EquivalenceReport]) -> String {
    let mut out = String::from(
        "s,p,q,id,lp_norm,heat_norm,seq_norm,approx_norm,\
         heat_over_lp,seq_over_lp,approx_over_lp,seq_over_heat,approx_over_heat,approx_over_seq\n",
    );
    for report in reports {
        let prefix = format!(
            "{},{},{}",
            fmt_f64(report.params.s),
            fmt_f64(report.params.p),
            fmt_f64(report.params.q),
        );
        for (id, r) in &report.rows {
            let mut line = format!(
                "{prefix},{id},{},{},{},{}",
                fmt_f64(r.lp_norm),
                fmt_f64(r.heat_norm),
                fmt_f64(r.seq_norm),
                fmt_f64(r.approx_norm),
            );
            for (_, ratio) in r.ratios() {
                let _ = write!(line, ",{}", fmt_f64(ratio));
            }
            out.push_str(&line);
            out.push('\n');
        }
    }
    out
}

/// Ensures `dir` exists and returns the joined path for a report file.
pub fn report_path(dir: &Path, name: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    Ok(dir.join(name))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{analyze, build_needlet_pair, build_tight_frame};
    use crate::spectral::{random_band_limited, LPFlavor, LPSystem};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn legendre() -> JacobiSetting {
        JacobiSetting::with_max_degree(0.0, 0.0, 512).unwrap()
    }

    #[test]
    fn frame_directory_round_trips_bit_identically() {
        let s = legendre();
        let pair = build_tight_frame(&s, 2.0, 4, 0.25).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let saved = save_frame(&s, &pair, dir.path()).unwrap();
        let (loaded, manifest) = load_frame(dir.path()).unwrap();
        assert_eq!(saved, manifest);
        assert_eq!(loaded.j_max(), pair.j_max());
        assert_eq!(loaded.kind(), pair.kind());
        for j in 0..=pair.j_max() {
            let (a, b) = (
                pair.elements(j, FrameSide::Primal),
                loaded.elements(j, FrameSide::Primal),
            );
            assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(b) {
                assert_eq!(x.center().to_bits(), y.center().to_bits());
                assert_eq!(x.k_lo(), y.k_lo());
                assert_eq!(x.band().len(), y.band().len());
                for (p, q) in x.band().iter().zip(y.band()) {
                    assert_eq!(p.to_bits(), q.to_bits());
                }
                assert_eq!(x.weight_sqrt().to_bits(), y.weight_sqrt().to_bits());
            }
            let (na, nb) = (pair.levels()[j].net(), loaded.levels()[j].net());
            assert_eq!(na.delta().to_bits(), nb.delta().to_bits());
            for (p, q) in na.cell_measures().iter().zip(nb.cell_measures()) {
                assert_eq!(p.to_bits(), q.to_bits());
            }
            nb.verify_invariants(&s).unwrap();
        }
    }

    #[test]
    fn saving_twice_is_refused_and_byte_identical_elsewhere() {
        let s = legendre();
        let pair = build_tight_frame(&s, 2.0, 3, 0.25).unwrap();
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        save_frame(&s, &pair, d1.path()).unwrap();
        assert!(matches!(
            save_frame(&s, &pair, d1.path()),
            Err(Error::Artifact(_))
        ));
        save_frame(&s, &pair, d2.path()).unwrap();
        for name in ["manifest.txt", "level_00.csv", "elements.csv"] {
            let a = fs::read(d1.path().join(name)).unwrap();
            let b = fs::read(d2.path().join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between identical saves");
        }
    }

    #[test]
    fn dual_family_round_trips_for_needlet_pairs() {
        let s = legendre();
        let lp = LPSystem::new(2.0, LPFlavor::Partition).unwrap();
        let pair = build_needlet_pair(&s, 2.0, 3, 0.25, &lp).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_frame(&s, &pair, dir.path()).unwrap();
        let (loaded, _) = load_frame(dir.path()).unwrap();
        for j in 0..=pair.j_max() {
            let (a, b) = (
                pair.elements(j, FrameSide::Dual),
                loaded.elements(j, FrameSide::Dual),
            );
            assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(b) {
                for (p, q) in x.band().iter().zip(y.band()) {
                    assert_eq!(p.to_bits(), q.to_bits());
                }
            }
        }
    }

    #[test]
    fn tampered_tables_fail_the_content_hash() {
        let s = legendre();
        let pair = build_tight_frame(&s, 2.0, 2, 0.25).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_frame(&s, &pair, dir.path()).unwrap();
        let victim = dir.path().join("level_01.csv");
        let body = fs::read_to_string(&victim).unwrap();
        // Same parsed values, different bytes: only the hash can notice.
        let tampered = body.replacen("e-", "E-", 1);
        assert_ne!(body, tampered, "tamper target not found");
        fs::write(&victim, tampered).unwrap();
        match load_frame(dir.path()) {
            Err(Error::Artifact(msg)) => assert!(msg.contains("content hash"), "{msg}"),
            other => panic!("expected hash failure, got {other:?}"),
        }
    }

    #[test]
    fn missing_directory_is_an_artifact_error() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("nope");
        match load_frame(&missing) {
            Err(Error::Artifact(msg)) => assert!(msg.contains("manifest.txt"), "{msg}"),
            other => panic!("expected artifact error, got {other:?}"),
        }
    }

    #[test]
    fn coefficient_tree_round_trips() {
        let s = legendre();
        let pair = build_tight_frame(&s, 2.0, 3, 0.25).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = random_band_limited(&s, 8.0, &mut rng);
        let tree = analyze(&pair, &f);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("coeffs.csv");
        save_tree(&tree, &pair, &path).unwrap();
        let loaded = load_tree(&path, &pair).unwrap();
        for j in 0..tree.n_levels() {
            for (a, b) in tree.level(j).iter().zip(loaded.level(j)) {
                assert_eq!(a.re.to_bits(), b.re.to_bits());
                assert_eq!(a.im.to_bits(), b.im.to_bits());
            }
        }
        // A tree from a different geometry is rejected on load.
        let other = build_tight_frame(&s, 2.0, 2, 0.25).unwrap();
        assert!(load_tree(&path, &other).is_err());
    }

    #[test]
    fn check_records_serialize_stably() {
        let checks = vec![CheckRecord {
            name: "markov_mass".into(),
            parameters: serde_json::json!({"t": 0.1, "points": 20}),
            realized: serde_json::json!({"worst_defect": 3.2e-11}),
            pass: true,
        }];
        let a = checks_json(&checks);
        let b = checks_json(&checks);
        assert_eq!(a, b);
        assert!(a.contains("\"markov_mass\""));
        assert!(a.ends_with('\n'));
    }

    #[test]
    fn fnv_hash_matches_reference_vectors() {
        // Published FNV-1a 64 test vectors.
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }
}
