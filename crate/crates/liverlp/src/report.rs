//! Self-contained HTML report of a run.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Deserializer};

use crate::runs::Run;
use crate::scoring::{CaseScore, TreeNode};

/// Query filters; every present field must match.
#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
pub struct ReportFilter {
    pub risk: Option<String>,
    #[serde(default, deserialize_with = "blank_as_none")]
    pub min: Option<i64>,
    #[serde(default, deserialize_with = "blank_as_none")]
    pub max: Option<i64>,
    pub rule: Option<String>,
}

/// Empty form fields arrive as empty strings.
fn blank_as_none<'de, D: Deserializer<'de>>(d: D) -> Result<Option<i64>, D::Error> {
    let raw: Option<String> = Option::deserialize(d)?;
    match raw.as_deref().map(str::trim) {
        None | Some("") => Ok(None),
        Some(s) => s.parse().map(Some).map_err(serde::de::Error::custom),
    }
}

impl ReportFilter {
    pub fn matches(&self, s: &CaseScore) -> bool {
        self.risk.as_ref().is_none_or(|r| r.is_empty() || &s.risk == r)
            && self.min.is_none_or(|m| s.soft_score >= m)
            && self.max.is_none_or(|m| s.soft_score <= m)
            && self
                .rule
                .as_ref()
                .is_none_or(|r| r.is_empty() || s.activated.iter().any(|a| &a.rule == r))
    }
}

pub fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

const STYLE: &str = "
body { font-family: system-ui, sans-serif; margin: 2em; color: #222; }
table { border-collapse: collapse; margin: 1em 0; }
th, td { border: 1px solid #bbb; padding: 4px 10px; text-align: left; }
th { background: #eee; cursor: pointer; }
pre.tree { background: #f7f7f7; padding: 8px; tab-size: 4; }
section.case { border-top: 1px solid #ccc; margin-top: 1.5em; }
form label { margin-right: 1em; }
.risk-low { color: #276827; } .risk-futile, .risk-high { color: #a01818; }
svg text { font-size: 12px; font-family: monospace; }
";

const SCRIPT: &str = "
document.querySelectorAll('th').forEach(function (th, col) {
  th.addEventListener('click', function () {
    var body = th.closest('table').tBodies[0];
    var rows = Array.prototype.slice.call(body.rows);
    var numeric = rows.every(function (r) { return !isNaN(parseFloat(r.cells[col].textContent)); });
    rows.sort(function (a, b) {
      var x = a.cells[col].textContent, y = b.cells[col].textContent;
      return numeric ? parseFloat(x) - parseFloat(y) : x.localeCompare(y);
    });
    rows.forEach(function (r) { body.appendChild(r); });
  });
});
";

/// The report for the cases of `run` that pass `filter`.
pub fn render(run: &Run, filter: &ReportFilter) -> String {
    let mut h = String::new();
    let title = format!("Run {}", run.run_id);
    let _ = write!(
        h,
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>{}</title>\n<style>{STYLE}</style>\n</head>\n<body>\n",
        escape(&title)
    );
    let _ = writeln!(h, "<h1>{}</h1>", escape(&title));
    let _ = writeln!(
        h,
        "<p>Classifier <code>{}</code> version {} over dataset <code>{}</code>, {}.</p>",
        escape(&run.classifier_id),
        run.classifier_version,
        escape(&run.dataset_id),
        run.created.format("%Y-%m-%d %H:%M:%S UTC")
    );

    let mut bands: BTreeMap<&str, usize> = BTreeMap::new();
    for s in &run.scores {
        *bands.entry(s.risk.as_str()).or_default() += 1;
    }
    let summary: Vec<String> = bands.iter().map(|(b, n)| format!("{} {n}", escape(b))).collect();
    let _ = writeln!(
        h,
        "<p>{} cases scored, {} failed. {}</p>",
        run.scores.len(),
        run.failures.len(),
        summary.join(", ")
    );

    filter_form(&mut h, run, filter);

    let shown: Vec<&CaseScore> = run.scores.iter().filter(|s| filter.matches(s)).collect();
    let _ = writeln!(h, "<p id=\"shown\">{} of {} cases shown.</p>", shown.len(), run.scores.len());
    h.push_str("<table id=\"scores\">\n<thead><tr><th>case</th><th>psoft</th><th>soft</th><th>risk</th><th>activated rules</th></tr></thead>\n<tbody>\n");
    for s in &shown {
        let rules: Vec<String> = s
            .activated
            .iter()
            .map(|a| format!("{} [{}]", escape(&a.rule), a.weight))
            .collect();
        let _ = writeln!(
            h,
            "<tr data-case=\"{id}\"><td><a href=\"#case-{id}\">{id}</a></td><td>{}</td><td>{}</td><td class=\"risk-{r}\">{r}</td><td>{}</td></tr>",
            s.psoft_score,
            s.soft_score,
            rules.join(", "),
            id = s.case_id,
            r = escape(&s.risk),
        );
    }
    h.push_str("</tbody>\n</table>\n");

    for s in &shown {
        let Some(ex) = run.explanations.iter().find(|e| e.case_id == s.case_id) else {
            continue;
        };
        let _ = writeln!(h, "<section class=\"case\" id=\"case-{}\">", s.case_id);
        let _ = writeln!(h, "<h2>Case {}</h2>", s.case_id);
        let _ = writeln!(h, "<details open><summary>Explanation</summary>\n<pre class=\"tree\">{}</pre>", escape(&ex.trees));
        for set in &ex.explanations {
            for tree in &set.alternatives {
                h.push_str(&svg(tree));
                h.push('\n');
            }
        }
        h.push_str("</details>\n</section>\n");
    }

    if !run.failures.is_empty() {
        h.push_str("<h2>Failures</h2>\n<ul id=\"failures\">\n");
        for f in &run.failures {
            let _ = writeln!(h, "<li>case {}: {}</li>", f.case_id, escape(&f.message));
        }
        h.push_str("</ul>\n");
    }
    let _ = write!(h, "<script>{SCRIPT}</script>\n</body>\n</html>\n");
    h
}

fn filter_form(h: &mut String, run: &Run, filter: &ReportFilter) {
    let mut bands: Vec<&str> = run.scores.iter().map(|s| s.risk.as_str()).collect();
    bands.sort();
    bands.dedup();
    h.push_str("<form method=\"get\">\n<label>risk <select name=\"risk\"><option value=\"\">any</option>");
    for b in bands {
        let selected = if filter.risk.as_deref() == Some(b) { " selected" } else { "" };
        let _ = write!(h, "<option value=\"{0}\"{selected}>{0}</option>", escape(b));
    }
    h.push_str("</select></label>\n");
    let num = |v: Option<i64>| v.map(|n| n.to_string()).unwrap_or_default();
    let _ = writeln!(
        h,
        "<label>min <input type=\"number\" name=\"min\" value=\"{}\"></label>",
        num(filter.min)
    );
    let _ = writeln!(
        h,
        "<label>max <input type=\"number\" name=\"max\" value=\"{}\"></label>",
        num(filter.max)
    );
    let _ = writeln!(
        h,
        "<label>rule <input type=\"text\" name=\"rule\" value=\"{}\"></label>",
        escape(filter.rule.as_deref().unwrap_or(""))
    );
    h.push_str("<button type=\"submit\">filter</button>\n</form>\n");
}

const COLUMN: f64 = 260.0;
const ROW: f64 = 28.0;

struct Placed<'a> {
    node: &'a TreeNode,
    depth: usize,
    row: usize,
    parent: Option<usize>,
}

/// A left-to-right drawing of one tree: depth along x, one row per node.
pub fn svg(tree: &TreeNode) -> String {
    let mut placed = Vec::new();
    fn walk<'a>(n: &'a TreeNode, depth: usize, parent: Option<usize>, out: &mut Vec<Placed<'a>>) {
        let me = out.len();
        out.push(Placed {
            node: n,
            depth,
            row: me,
            parent,
        });
        for c in &n.children {
            walk(c, depth + 1, Some(me), out);
        }
    }
    walk(tree, 0, None, &mut placed);
    let depth = placed.iter().map(|p| p.depth).max().unwrap_or(0);
    let width = COLUMN * (depth as f64 + 1.0) + 20.0;
    let height = ROW * placed.len() as f64 + 10.0;
    let mut s = String::new();
    let _ = write!(
        s,
        "<svg width=\"{width}\" height=\"{height}\" role=\"img\">"
    );
    let at = |p: &Placed<'_>| (10.0 + COLUMN * p.depth as f64, 5.0 + ROW * p.row as f64);
    for p in &placed {
        if let Some(parent) = p.parent {
            let (px, py) = at(&placed[parent]);
            let (x, y) = at(p);
            let _ = write!(
                s,
                "<path d=\"M{} {} V{} H{}\" fill=\"none\" stroke=\"#888\"/>",
                px + 8.0,
                py + 20.0,
                y + 10.0,
                x
            );
        }
    }
    for p in &placed {
        let (x, y) = at(p);
        let fill = if p.node.labeled { "#e6f0ff" } else { "#f2f2f2" };
        let _ = write!(
            s,
            "<rect x=\"{x}\" y=\"{y}\" width=\"{}\" height=\"20\" rx=\"4\" fill=\"{fill}\" stroke=\"#999\"/><text x=\"{}\" y=\"{}\">{}</text>",
            COLUMN - 20.0,
            x + 4.0,
            y + 14.0,
            escape(&p.node.display.replace('\t', " "))
        );
    }
    s.push_str("</svg>");
    s
}
