use super::model::WaypointId;
use super::SyntaxError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    /// Keywords and attribute names.
    Word(String),
    /// Numeric literal with its source text.
    Number(f64, String),
    Waypoint(WaypointId),
    Str(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Eq,
    Semi,
    Comma,
    Arrow,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Word(w) => format!("`{w}`"),
            Tok::Number(_, text) => format!("number {text}"),
            Tok::Waypoint(w) => format!("waypoint {w}"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, SyntaxError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, c: char| {
        *i += 1;
        if c == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
    };

    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let err = |message: String| SyntaxError {
            line: tl,
            column: tc,
            message,
        };
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, c);
            continue;
        }
        if c == '#' || (c == '/' && chars.get(i + 1) == Some(&'/')) {
            while i < chars.len() && chars[i] != '\n' {
                { let ch = chars[i]; advance(&mut i, &mut line, &mut col, ch); }
            }
            continue;
        }
        let single = match c {
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '=' => Some(Tok::Eq),
            ';' => Some(Tok::Semi),
            ',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(tok) = single {
            advance(&mut i, &mut line, &mut col, c);
            out.push(Token { tok, line: tl, column: tc });
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'>') {
            advance(&mut i, &mut line, &mut col, '-');
            advance(&mut i, &mut line, &mut col, '>');
            out.push(Token {
                tok: Tok::Arrow,
                line: tl,
                column: tc,
            });
            continue;
        }
        if c == '"' {
            advance(&mut i, &mut line, &mut col, c);
            let mut s = String::new();
            loop {
                let Some(&ch) = chars.get(i) else {
                    return Err(err("unterminated string".into()));
                };
                advance(&mut i, &mut line, &mut col, ch);
                match ch {
                    '"' => break,
                    '\n' => return Err(err("newline in string".into())),
                    '\\' => {
                        let Some(&esc) = chars.get(i) else {
                            return Err(err("unterminated string".into()));
                        };
                        advance(&mut i, &mut line, &mut col, esc);
                        match esc {
                            '"' => s.push('"'),
                            '\\' => s.push('\\'),
                            'n' => s.push('\n'),
                            other => return Err(err(format!("unknown escape `\\{other}`"))),
                        }
                    }
                    other => s.push(other),
                }
            }
            out.push(Token {
                tok: Tok::Str(s),
                line: tl,
                column: tc,
            });
            continue;
        }
        if c.is_ascii_digit() || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit() || *d == '.')) {
            let mut text = String::new();
            text.push(c);
            advance(&mut i, &mut line, &mut col, c);
            while let Some(&d) = chars.get(i) {
                if d.is_ascii_digit() || d == '.' {
                    text.push(d);
                    advance(&mut i, &mut line, &mut col, d);
                } else {
                    break;
                }
            }
            let dots = text.matches('.').count();
            let tok = if dots == 3 {
                Tok::Waypoint(
                    text.parse()
                        .map_err(|_| err(format!("malformed waypoint id `{text}`")))?,
                )
            } else if dots <= 1 {
                let v: f64 = text
                    .parse()
                    .map_err(|_| err(format!("malformed number `{text}`")))?;
                Tok::Number(v, text)
            } else {
                return Err(err(format!("malformed number `{text}`")));
            };
            out.push(Token { tok, line: tl, column: tc });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut w = String::new();
            while let Some(&d) = chars.get(i) {
                if d.is_ascii_alphanumeric() || d == '_' {
                    w.push(d);
                    advance(&mut i, &mut line, &mut col, d);
                } else {
                    break;
                }
            }
            out.push(Token {
                tok: Tok::Word(w),
                line: tl,
                column: tc,
            });
            continue;
        }
        return Err(err(format!("unexpected character `{c}`")));
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn numbers_and_waypoints() {
        assert_eq!(
            toks("1 -2.5 1.2.1.3 -> x"),
            vec![
                Tok::Number(1.0, "1".into()),
                Tok::Number(-2.5, "-2.5".into()),
                Tok::Waypoint(WaypointId::new(1, 2, 1, 3)),
                Tok::Arrow,
                Tok::Word("x".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn comments_and_positions() {
        let t = tokenize("# c\n  LANE // d\n{").unwrap();
        assert_eq!((t[0].line, t[0].column), (2, 3));
        assert_eq!((t[1].line, t[1].column), (3, 1));
    }

    #[test]
    fn strings() {
        assert_eq!(toks(r#""a \"b\"""#)[0], Tok::Str("a \"b\"".into()));
        assert!(tokenize("\"open").is_err());
    }

    #[test]
    fn bad_number() {
        assert!(tokenize("1.2.3").is_err());
    }
}
