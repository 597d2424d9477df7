//! `%Var` placeholders inside text labels. `%%` stands for a literal `%`.

/// Variable names referenced by a label template, in order of appearance.
pub fn placeholders(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    scan(text, |piece| {
        if let Piece::Var(v) = piece {
            out.push(v.to_string());
        }
    });
    out
}

/// Substitutes every placeholder `lookup` knows about. Unknown placeholders
/// and `%%` escapes are kept verbatim unless `finish` is set, in which case
/// `%%` collapses to `%`.
pub fn interpolate(text: &str, lookup: impl Fn(&str) -> Option<String>, finish: bool) -> String {
    let mut out = String::with_capacity(text.len());
    scan(text, |piece| match piece {
        Piece::Text(t) => out.push_str(t),
        Piece::Percent => out.push_str(if finish { "%" } else { "%%" }),
        Piece::Var(v) => match lookup(v) {
            Some(s) => out.push_str(&s),
            None => {
                out.push('%');
                out.push_str(v);
            }
        },
    });
    out
}

enum Piece<'a> {
    Text(&'a str),
    Percent,
    Var(&'a str),
}

fn scan<'a>(text: &'a str, mut emit: impl FnMut(Piece<'a>)) {
    let bytes = text.as_bytes();
    let mut i = 0;
    let mut start = 0;
    while i < bytes.len() {
        if bytes[i] != b'%' {
            i += 1;
            continue;
        }
        if i + 1 < bytes.len() && bytes[i + 1] == b'%' {
            emit(Piece::Text(&text[start..i]));
            emit(Piece::Percent);
            i += 2;
            start = i;
            continue;
        }
        if i + 1 < bytes.len() && bytes[i + 1].is_ascii_uppercase() {
            emit(Piece::Text(&text[start..i]));
            let mut j = i + 1;
            while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_') {
                j += 1;
            }
            emit(Piece::Var(&text[i + 1..j]));
            i = j;
            start = i;
            continue;
        }
        i += 1;
    }
    emit(Piece::Text(&text[start..]));
}
