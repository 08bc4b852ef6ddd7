use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::DuplicateCluster;
use crate::error::{Error, Result};

/// Cluster size → number of clusters of that size.
pub type SizeHistogram = BTreeMap<usize, usize>;

pub fn cluster_size_histogram<'a, I>(clusters: I) -> SizeHistogram
where
    I: IntoIterator<Item = &'a DuplicateCluster>,
{
    let mut hist = SizeHistogram::new();
    for c in clusters {
        *hist.entry(c.size()).or_default() += 1;
    }
    hist
}

/// Sum of `size × count`, i.e. the number of documents involved in any cluster.
pub fn clustered_documents(hist: &SizeHistogram) -> usize {
    hist.iter().map(|(size, count)| size * count).sum()
}

/// Tab-separated `cluster_size\tcount` rows, ascending by size, after a header line.
pub fn histogram_tsv(hist: &SizeHistogram) -> String {
    let mut out = String::from("cluster_size\tcount\n");
    for (size, count) in hist {
        let _ = writeln!(out, "{size}\t{count}");
    }
    out
}

pub fn write_histogram_tsv(path: impl AsRef<Path>, hist: &SizeHistogram) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, histogram_tsv(hist)).map_err(|e| Error::io(path, e))
}

/// Log-log scatter plot of the histogram as a standalone SVG document.
pub fn histogram_svg(hist: &SizeHistogram, title: &str) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const M: f64 = 56.0;
    let max_size = hist.keys().copied().max().unwrap_or(1).max(2) as f64;
    let max_count = hist.values().copied().max().unwrap_or(1).max(2) as f64;
    // Decades spanned by each axis, starting at 10^0.
    let x_dec = max_size.log10().ceil().max(1.0);
    let y_dec = max_count.log10().ceil().max(1.0);
    let x = |v: f64| M + (v.log10() / x_dec) * (W - 2.0 * M);
    let y = |v: f64| H - M - (v.log10() / y_dec) * (H - 2.0 * M);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    let _ = writeln!(
        svg,
        r#"<path d="M{M} {} H{} M{M} {} V{M}" stroke="black" fill="none"/>"#,
        H - M,
        W - M,
        H - M
    );
    for d in 0..=x_dec as u32 {
        let px = x(10f64.powi(d as i32));
        let _ = writeln!(
            svg,
            r#"<line x1="{px:.1}" y1="{}" x2="{px:.1}" y2="{}" stroke="black"/><text x="{px:.1}" y="{}" text-anchor="middle">1e{d}</text>"#,
            H - M,
            H - M + 5.0,
            H - M + 20.0
        );
    }
    for d in 0..=y_dec as u32 {
        let py = y(10f64.powi(d as i32));
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{py:.1}" x2="{M}" y2="{py:.1}" stroke="black"/><text x="{}" y="{:.1}" text-anchor="end">1e{d}</text>"#,
            M - 5.0,
            M - 8.0,
            py + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">cluster size</text>"#,
        W / 2.0,
        H - 12.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">clusters</text>"#,
        H / 2.0,
        H / 2.0
    );
    for (&size, &count) in hist {
        let _ = writeln!(
            svg,
            r##"<circle cx="{:.1}" cy="{:.1}" r="3" fill="#1f77b4"><title>{size}: {count}</title></circle>"##,
            x(size as f64),
            y(count as f64)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
