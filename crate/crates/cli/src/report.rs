//! Static HTML bundle of every artifact under the output directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use loadfeat_core::artifact::write_text;

use crate::commands::Ctx;
use crate::CliError;

const SECTIONS: [(&str, &str); 5] = [
    ("corpus", "Corpus feature words"),
    ("db", "Feature store"),
    ("identify", "Identification"),
    ("forecast", "Scheme comparison"),
    ("analyze", "Analysis"),
];

/// CSV files at most this long are rendered as tables.
const TABLE_ROWS: usize = 40;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn list_files(dir: &Path) -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map(|rd| rd.filter_map(|e| e.ok()).map(|e| e.path()).filter(|p| p.is_file()).collect())
        .unwrap_or_default();
    files.sort();
    files
}

fn csv_table(text: &str) -> Option<String> {
    let lines: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    if lines.len() < 2 || lines.len() > TABLE_ROWS + 1 {
        return None;
    }
    let joined = lines.join("\n");
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(joined.as_bytes());
    let mut html = String::from("<table>\n");
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.ok()?;
        let tag = if i == 0 { "th" } else { "td" };
        html.push_str("<tr>");
        for cell in rec.iter() {
            let shown = match cell.parse::<f64>() {
                Ok(v) if cell.contains('.') && cell.len() > 8 => format!("{v:.4}"),
                _ => cell.to_string(),
            };
            let _ = write!(html, "<{tag}>{}</{tag}>", escape(&shown));
        }
        html.push_str("</tr>\n");
    }
    html.push_str("</table>\n");
    Some(html)
}

fn inline_svg(text: &str) -> &str {
    text.find("<svg").map_or(text, |i| &text[i..])
}

pub fn write_report(ctx: &Ctx) -> Result<Vec<PathBuf>, CliError> {
    let out = &ctx.cfg.out_dir;
    let mut body = String::new();
    let mut found = 0;
    for (dir, title) in SECTIONS {
        let files = list_files(&out.join(dir));
        if files.is_empty() {
            continue;
        }
        let _ = writeln!(body, "<section>\n<h2>{}</h2>\n<ul>", escape(title));
        for f in &files {
            let name = f.file_name().unwrap().to_string_lossy();
            let _ = writeln!(body, "<li><a href=\"../{dir}/{0}\">{0}</a></li>", escape(&name));
        }
        body.push_str("</ul>\n");
        for f in &files {
            let text = match std::fs::read_to_string(f) {
                Ok(t) => t,
                Err(_) => continue,
            };
            let name = f.file_name().unwrap().to_string_lossy().into_owned();
            match f.extension().and_then(|e| e.to_str()) {
                Some("svg") => {
                    let _ = writeln!(body, "<figure>{}<figcaption>{}</figcaption></figure>", inline_svg(&text), escape(&name));
                }
                Some("csv") => {
                    if let Some(t) = csv_table(&text) {
                        let _ = writeln!(body, "<h3>{}</h3>\n{t}", escape(&name));
                    }
                }
                _ => {}
            }
            found += 1;
        }
        body.push_str("</section>\n");
    }
    if found == 0 {
        return Err(CliError::Validation(format!("no artifacts under {}; run the pipeline first", out.display())));
    }
    let mut html = String::new();
    html.push_str(&ctx.prov.xml_comment());
    html.push_str("<!DOCTYPE html>\n");
    let _ = write!(
        html,
        "<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>loadfeat report</title>\n<style>\n\
         body {{ font-family: sans-serif; max-width: 960px; margin: 2em auto; color: #222; }}\n\
         table {{ border-collapse: collapse; margin: 0.5em 0 1.5em; font-size: 0.85em; }}\n\
         td, th {{ border: 1px solid #ccc; padding: 2px 6px; text-align: right; }}\n\
         figure {{ margin: 1em 0; }} svg {{ max-width: 100%; height: auto; }}\n\
         code {{ background: #f4f4f4; padding: 0 3px; }}\n\
         </style>\n</head>\n<body>\n<h1>loadfeat report</h1>\n\
         <p>Config <code>{}</code>, seed <code>{}</code>.</p>\n",
        ctx.cfg.hash(),
        ctx.cfg.seed
    );
    html.push_str(&body);
    html.push_str("</body>\n</html>\n");
    let path = out.join("report/index.html");
    write_text(&path, &html)?;
    Ok(vec![path])
}
