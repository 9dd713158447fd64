//! Minimal s-expression reader with source positions.

use super::DomainError;

#[derive(Debug, Clone, PartialEq)]
pub enum Sexpr {
    Atom { text: String, line: u32, col: u32 },
    List { items: Vec<Sexpr>, line: u32, col: u32 },
}

impl Sexpr {
    pub fn pos(&self) -> (u32, u32) {
        match self {
            Sexpr::Atom { line, col, .. } | Sexpr::List { line, col, .. } => (*line, *col),
        }
    }

    pub fn atom(&self) -> Option<&str> {
        match self {
            Sexpr::Atom { text, .. } => Some(text),
            _ => None,
        }
    }

    pub fn items(&self) -> Option<&[Sexpr]> {
        match self {
            Sexpr::List { items, .. } => Some(items),
            _ => None,
        }
    }
}

struct Reader<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    col: u32,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        Reader { chars: text.chars().peekable(), line: 1, col: 1 }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.chars.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some(';') => {
                    // comment to end of line
                    while let Some(&c) = self.chars.peek() {
                        self.bump();
                        if c == '\n' {
                            break;
                        }
                    }
                }
                _ => return,
            }
        }
    }

    fn read_one(&mut self) -> Result<Sexpr, DomainError> {
        self.skip_trivia();
        let (line, col) = (self.line, self.col);
        match self.chars.peek() {
            None => Err(DomainError::syntax("unexpected end of input", line, col)),
            Some('(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_trivia();
                    match self.chars.peek() {
                        None => {
                            return Err(DomainError::syntax(
                                "unclosed parenthesis",
                                line, col,
                            ))
                        }
                        Some(')') => {
                            self.bump();
                            return Ok(Sexpr::List { items, line, col });
                        }
                        _ => items.push(self.read_one()?),
                    }
                }
            }
            Some(')') => Err(DomainError::syntax("unexpected `)`", line, col)),
            _ => {
                let mut text = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    text.push(c);
                    self.bump();
                }
                Ok(Sexpr::Atom { text, line, col })
            }
        }
    }
}

/// Reads every top-level s-expression in `text`.
pub fn read_all(text: &str) -> Result<Vec<Sexpr>, DomainError> {
    let mut r = Reader::new(text);
    let mut out = Vec::new();
    loop {
        r.skip_trivia();
        if r.chars.peek().is_none() {
            return Ok(out);
        }
        out.push(r.read_one()?);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_nested_lists() {
        let es = read_all("(a (b c) d) ; comment\n(e)").unwrap();
        assert_eq!(es.len(), 2);
        assert_eq!(es[0].items().unwrap().len(), 3);
        assert_eq!(es[1].items().unwrap()[0].atom(), Some("e"));
    }

    #[test]
    fn unclosed_paren_reports_position() {
        let err = read_all("(a\n  (b").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("2:3"), "{msg}");
    }
}
