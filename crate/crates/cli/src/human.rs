//! Plain-text rendering of API responses.

use serde_json::Value;

fn s(v: &Value) -> &str {
    v.as_str().unwrap_or("")
}

fn tags(v: &Value) -> String {
    v.as_array()
        .map(|a| a.iter().map(s).collect::<Vec<_>>().join(", "))
        .unwrap_or_default()
}

fn score(v: &Value) -> String {
    format!("{:+} (+{}/-{})", v["net"].as_i64().unwrap_or(0), v["ups"], v["downs"])
}

pub fn project(p: &Value) -> String {
    let mut line = format!("{}  {}  v{}  {}", s(&p["id"]), s(&p["name"]), p["version"], s(&p["visibility"]));
    let t = tags(&p["tags"]);
    if !t.is_empty() {
        line.push_str(&format!("  [{t}]"));
    }
    line
}

pub fn project_detail(d: &Value) -> String {
    let mut out = vec![project(&d["project"])];
    let desc = s(&d["project"]["description"]);
    if !desc.is_empty() {
        out.push(format!("  {desc}"));
    }
    out.push(format!("  score {}", score(&d["score"])));
    if let Some(p) = d.get("provenance") {
        let gone = if p["origin_available"] == Value::Bool(true) { "" } else { " (origin gone)" };
        out.push(format!("  copied from {} v{}{gone}", s(&p["name"]), p["version"]));
    }
    for r in d["roots"].as_array().into_iter().flatten() {
        out.push(format!("  {}  {}/", s(&r["id"]), s(&r["name"])));
    }
    out.join("\n")
}

pub fn summaries(items: &Value, total: Option<u64>) -> String {
    let mut out: Vec<String> = items
        .as_array()
        .into_iter()
        .flatten()
        .map(|p| format!("{}  score {}", project(p), score(&p["score"])))
        .collect();
    out.push(footer(items, total));
    out.join("\n")
}

pub fn results(items: &Value, total: Option<u64>) -> String {
    let mut out: Vec<String> = items
        .as_array()
        .into_iter()
        .flatten()
        .map(|r| {
            format!(
                "{}  {}  score {}  [{}]",
                s(&r["id"]),
                s(&r["title"]),
                r["score"],
                tags(&r["matched_fields"])
            )
        })
        .collect();
    out.push(footer(items, total));
    out.join("\n")
}

fn footer(items: &Value, total: Option<u64>) -> String {
    let shown = items.as_array().map_or(0, Vec::len);
    match total {
        Some(t) => format!("({shown} of {t})"),
        None => format!("({shown})"),
    }
}

pub fn rating(r: &Value) -> String {
    let own = r["own"].as_str().unwrap_or("none");
    let eligible = if r["eligible"] == Value::Bool(true) { "yes" } else { "no" };
    format!("score {}; your vote: {own}; may vote: {eligible}", score(&r["aggregate"]))
}

pub fn events(list: &Value) -> String {
    list.as_array()
        .into_iter()
        .flatten()
        .map(|e| format!("#{} {} {} {}", e["seq"], s(&e["at"]), s(&e["action"]), s(&e["target"])))
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn folder(f: &Value) -> String {
    format!("{}  {}", s(&f["id"]), s(&f["name"]))
}

pub fn listing(l: &Value) -> String {
    let mut out = vec![format!("{}  {}/", s(&l["folder"]["id"]), s(&l["path"]))];
    for f in l["subfolders"].as_array().into_iter().flatten() {
        out.push(format!("  dir   {}  {}/", s(&f["id"]), s(&f["name"])));
    }
    for a in l["artifacts"].as_array().into_iter().flatten() {
        out.push(format!("  file  {}  {}", s(&a["id"]), artifact_label(a)));
    }
    out.join("\n")
}

fn artifact_label(a: &Value) -> String {
    let short = &s(&a["asset"])[..12.min(s(&a["asset"]).len())];
    match s(&a["selector"]["kind"]) {
        "byte_range" => format!(
            "{}  {short}[{}+{}]",
            s(&a["display_name"]),
            a["selector"]["offset"],
            a["selector"]["len"]
        ),
        "members" => format!("{}  {short}{{{}}}", s(&a["display_name"]), tags(&a["selector"]["paths"])),
        _ => format!("{}  {short}", s(&a["display_name"])),
    }
}

pub fn artifact(a: &Value) -> String {
    format!("{}  {}", s(&a["id"]), artifact_label(a))
}

pub fn asset(m: &Value) -> String {
    let mut out = vec![
        format!("{}", s(&m["id"])),
        format!("  file  {} ({} bytes, {})", s(&m["original_filename"]), m["size_bytes"], s(&m["media_type"])),
        format!("  tags  {}", tags(&m["tags"])),
        format!("  used by {} artifact(s)", m["refcount"]),
    ];
    if let Some(members) = m.get("archive_members") {
        out.push(format!("  members  {}", tags(members)));
    }
    out.join("\n")
}

pub fn upload(u: &Value) -> String {
    let state = if u["existing"] == Value::Bool(true) { "already stored" } else { "stored" };
    format!("{}  {state}", asset(&u["asset"]))
}

pub fn user(u: &Value) -> String {
    format!("{}  {} <{}>", s(&u["id"]), s(&u["display_name"]), s(&u["email"]))
}
