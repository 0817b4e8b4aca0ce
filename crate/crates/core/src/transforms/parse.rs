use std::collections::BTreeMap;

use super::{CensorRegion, CensorShape, FlipAxis, TransformSpec};

/// A parse failure at a 1-based character column of the line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub column: usize,
    pub message: String,
}

impl std::fmt::Display for ParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "column {}: {}", self.column, self.message)
    }
}

impl std::error::Error for ParseError {}

fn err(column: usize, message: impl Into<String>) -> ParseError {
    ParseError { column, message: message.into() }
}

/// Whitespace-separated tokens with their 1-based columns.
pub(crate) fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s + 1, &line[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}

struct Keys<'a> {
    at: usize,
    values: BTreeMap<&'a str, (usize, &'a str)>,
}

impl<'a> Keys<'a> {
    fn collect(at: usize, toks: &[(usize, &'a str)], allowed: &[&str]) -> Result<Keys<'a>, ParseError> {
        let mut values = BTreeMap::new();
        for (col, tok) in toks {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| err(*col, format!("expected key=value, found `{tok}`")))?;
            if !allowed.contains(&k) {
                return Err(err(*col, format!("unknown key `{k}` (expected one of {})", allowed.join(", "))));
            }
            if values.insert(k, (*col, v)).is_some() {
                return Err(err(*col, format!("duplicate key `{k}`")));
            }
        }
        Ok(Keys { at, values })
    }

    fn raw(&self, k: &str) -> Result<(usize, &'a str), ParseError> {
        self.values.get(k).copied().ok_or_else(|| err(self.at, format!("missing key `{k}`")))
    }

    fn num<T: std::str::FromStr>(&self, k: &str) -> Result<T, ParseError> {
        let (col, v) = self.raw(k)?;
        v.parse().map_err(|_| err(col + k.len() + 1, format!("invalid value `{v}` for `{k}`")))
    }

    fn float(&self, k: &str) -> Result<f64, ParseError> {
        let (col, v) = self.raw(k)?;
        match v.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(x),
            _ => Err(err(col + k.len() + 1, format!("invalid number `{v}` for `{k}`"))),
        }
    }
}

pub(crate) fn parse_transform(line: &str) -> Result<TransformSpec, ParseError> {
    let toks = tokens(line);
    let Some(&(col, name)) = toks.first() else {
        return Err(err(1, "empty transform"));
    };
    let rest = &toks[1..];
    let keys = |allowed: &[&str]| Keys::collect(col, rest, allowed);
    let spec = match name {
        "crop" => {
            let k = keys(&["x", "y", "w", "h"])?;
            TransformSpec::Crop { x: k.num("x")?, y: k.num("y")?, w: k.num("w")?, h: k.num("h")? }
        }
        "rotate" => TransformSpec::Rotate { degrees: keys(&["deg"])?.num("deg")? },
        "flip" => {
            let k = keys(&["axis"])?;
            let (c, v) = k.raw("axis")?;
            let axis = match v {
                "horizontal" => FlipAxis::Horizontal,
                "vertical" => FlipAxis::Vertical,
                _ => return Err(err(c + 5, format!("axis must be horizontal or vertical, not `{v}`"))),
            };
            TransformSpec::Flip { axis }
        }
        "translate" => {
            let k = keys(&["dx", "dy"])?;
            TransformSpec::Translate { dx: k.num("dx")?, dy: k.num("dy")? }
        }
        "resize" => {
            let k = keys(&["w", "h"])?;
            TransformSpec::Resize { w: k.num("w")?, h: k.num("h")? }
        }
        "censor" => parse_censor(col, rest)?,
        "whitebalance" => {
            let k = keys(&["r", "g", "b"])?;
            TransformSpec::WhiteBalance { gains: [k.float("r")?, k.float("g")?, k.float("b")?] }
        }
        "contrast" => TransformSpec::Contrast { factor: keys(&["f"])?.float("f")? },
        "rgb2ycbcr" | "ycbcr2rgb" | "sharpen" | "blur" => {
            if let Some((c, t)) = rest.first() {
                return Err(err(*c, format!("`{name}` takes no parameters, found `{t}`")));
            }
            match name {
                "rgb2ycbcr" => TransformSpec::Rgb2YCbCr,
                "ycbcr2rgb" => TransformSpec::YCbCr2Rgb,
                "sharpen" => TransformSpec::Sharpen,
                _ => TransformSpec::Blur,
            }
        }
        other => return Err(err(col, format!("unknown transform `{other}`"))),
    };
    Ok(spec)
}

fn parse_censor(col: usize, rest: &[(usize, &str)]) -> Result<TransformSpec, ParseError> {
    let mut regions = Vec::new();
    let mut i = 0;
    while i < rest.len() {
        let (c, word) = rest[i];
        let shape = match word {
            "rect" => CensorShape::Rect,
            "oval" => CensorShape::Oval,
            _ => return Err(err(c, format!("expected `rect` or `oval`, found `{word}`"))),
        };
        let end = rest[i + 1..]
            .iter()
            .position(|(_, t)| !t.contains('='))
            .map_or(rest.len(), |p| i + 1 + p);
        let k = Keys::collect(c, &rest[i + 1..end], &["x", "y", "w", "h"])?;
        regions.push(CensorRegion { shape, x: k.num("x")?, y: k.num("y")?, w: k.num("w")?, h: k.num("h")? });
        i = end;
    }
    if regions.is_empty() {
        return Err(err(col, "censor needs at least one `rect` or `oval` region"));
    }
    Ok(TransformSpec::Censor { regions })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reports_columns() {
        let e = parse_transform("crop x=1 y=2 w=3 q=4").unwrap_err();
        assert_eq!(e.column, 18);
        let e = parse_transform("  contrast f=abc").unwrap_err();
        assert_eq!(e.column, 14);
        let e = parse_transform("crop x=1 y=2 w=3").unwrap_err();
        assert!(e.message.contains("missing key `h`"));
        assert!(parse_transform("blur extra").is_err());
        assert!(parse_transform("crop x=1 x=1 w=1 h=1 y=0").unwrap_err().message.contains("duplicate"));
        assert!(parse_transform("censor").is_err());
        assert!(parse_transform("warp").is_err());
    }
}
