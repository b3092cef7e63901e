use thiserror::Error;

use super::{Block, MacroProgram, MacroStmt, RegisterRef};

#[derive(Debug, Error, PartialEq, Eq)]
#[error("{line}:{col}: {message}")]
pub struct MacroError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Num(u64),
    Assign,
    Plus,
    Minus,
    Star,
    Greater,
    LParen,
    RParen,
    Semi,
    Probe(String),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Num(n) => format!("'{n}'"),
            Tok::Assign => "':='".into(),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::Greater => "'>'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Semi => "';'".into(),
            Tok::Probe(n) => format!("probe '{n}'"),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

#[derive(Default)]
struct Decls {
    registers: Vec<(String, usize, usize)>,
    scratch: Option<String>,
}

fn lex(text: &str) -> Result<(Vec<Spanned>, Decls), MacroError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut decls = Decls::default();
    let mut header_seen = false;
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, col, message: String| MacroError { line, col, message };

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '(' && chars.get(i + 1) == Some(&'*') {
            bump!();
            bump!();
            let start = i;
            loop {
                if i + 1 >= chars.len() {
                    return Err(err(tl, tc, "unterminated comment".into()));
                }
                if chars[i] == '*' && chars[i + 1] == ')' {
                    break;
                }
                bump!();
            }
            let body: String = chars[start..i].iter().collect();
            bump!();
            bump!();
            let body = body.trim();
            if let Some(name) = strip_prefix_ci(body, "probe:") {
                let name = name.trim();
                if name.is_empty() || name.contains(char::is_whitespace) {
                    return Err(err(tl, tc, format!("bad probe name '{name}'")));
                }
                out.push(Spanned {
                    tok: Tok::Probe(name.to_string()),
                    line: tl,
                    col: tc,
                });
            } else if !header_seen {
                if let Some(regs) = header_registers(body) {
                    header_seen = true;
                    for r in regs {
                        if !decls.registers.iter().any(|(n, ..)| *n == r) {
                            decls.registers.push((r, tl, tc));
                        }
                    }
                }
            }
            continue;
        }
        if c == '#' {
            let start = i;
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            let body: String = chars[start + 1..i].iter().collect();
            let mut words = body.splitn(2, char::is_whitespace);
            let kw = words.next().unwrap_or("").to_ascii_lowercase();
            let rest = words.next().unwrap_or("").trim();
            match kw.as_str() {
                "registers" => {
                    for name in rest.split(',').map(str::trim) {
                        if !is_ident(name) {
                            return Err(err(tl, tc, format!("bad register name '{name}'")));
                        }
                        if decls.registers.iter().any(|(n, ..)| n == name) {
                            return Err(err(tl, tc, format!("register '{name}' declared twice")));
                        }
                        decls.registers.push((name.to_string(), tl, tc));
                    }
                }
                "scratch" => {
                    if !is_ident(rest) {
                        return Err(err(tl, tc, format!("bad scratch name '{rest}'")));
                    }
                    decls.scratch = Some(rest.to_string());
                }
                _ => return Err(err(tl, tc, format!("unknown directive '#{kw}'"))),
            }
            continue;
        }
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                bump!();
            }
            out.push(Spanned {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                line: tl,
                col: tc,
            });
            continue;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                bump!();
            }
            let s: String = chars[start..i].iter().collect();
            let n = s
                .parse::<u64>()
                .map_err(|_| err(tl, tc, format!("number '{s}' too large")))?;
            out.push(Spanned {
                tok: Tok::Num(n),
                line: tl,
                col: tc,
            });
            continue;
        } else if c == ':' && chars.get(i + 1) == Some(&'=') {
            bump!();
            Tok::Assign
        } else {
            match c {
                '+' => Tok::Plus,
                '-' => Tok::Minus,
                '*' => Tok::Star,
                '>' => Tok::Greater,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ';' => Tok::Semi,
                other => return Err(err(tl, tc, format!("unexpected character '{other}'"))),
            }
        };
        bump!();
        out.push(Spanned {
            tok,
            line: tl,
            col: tc,
        });
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok((out, decls))
}

fn strip_prefix_ci<'a>(s: &'a str, prefix: &str) -> Option<&'a str> {
    if s.len() >= prefix.len() && s[..prefix.len()].eq_ignore_ascii_case(prefix) {
        Some(&s[prefix.len()..])
    } else {
        None
    }
}

fn is_ident(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Registers named by a header comment such as
/// `input: X in A, Y in B; output: B`, in order of first mention.
fn header_registers(body: &str) -> Option<Vec<String>> {
    let lower = body.to_ascii_lowercase();
    let at = lower.find("input:")?;
    let mut regs: Vec<String> = Vec::new();
    let mut push = |r: &str| {
        let r = r.trim();
        if is_ident(r) && !regs.iter().any(|x| x == r) {
            regs.push(r.to_string());
        }
    };
    for part in body[at..].split(';') {
        let part = part.trim();
        if let Some(inputs) = strip_prefix_ci(part, "input:") {
            for item in inputs.split(',') {
                let words: Vec<&str> = item.split_whitespace().collect();
                if let Some(pos) = words.iter().position(|w| w.eq_ignore_ascii_case("in")) {
                    if let Some(r) = words.get(pos + 1) {
                        push(r);
                    }
                }
            }
        } else if let Some(outputs) = strip_prefix_ci(part, "output:") {
            for item in outputs.split(',') {
                push(item);
            }
        }
    }
    Some(regs)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    registers: Vec<String>,
    scratch: Option<String>,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn error_at(&self, t: &Spanned, message: impl Into<String>) -> MacroError {
        MacroError {
            line: t.line,
            col: t.col,
            message: message.into(),
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s.eq_ignore_ascii_case(kw))
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), MacroError> {
        let t = self.next();
        match &t.tok {
            Tok::Ident(s) if s.eq_ignore_ascii_case(kw) => Ok(()),
            other => Err(self.error_at(&t, format!("expected '{kw}', found {}", other.describe()))),
        }
    }

    fn expect(&mut self, want: Tok) -> Result<(), MacroError> {
        let t = self.next();
        if t.tok == want {
            Ok(())
        } else {
            Err(self.error_at(
                &t,
                format!("expected {}, found {}", want.describe(), t.tok.describe()),
            ))
        }
    }

    fn ident(&mut self) -> Result<(String, Spanned), MacroError> {
        let t = self.next();
        match &t.tok {
            Tok::Ident(s) => Ok((s.clone(), t.clone())),
            other => Err(self.error_at(&t, format!("expected a name, found {}", other.describe()))),
        }
    }

    fn number(&mut self) -> Result<u64, MacroError> {
        let t = self.next();
        match t.tok {
            Tok::Num(n) => Ok(n),
            ref other => Err(self.error_at(&t, format!("expected a number, found {}", other.describe()))),
        }
    }

    fn register(&mut self) -> Result<RegisterRef, MacroError> {
        let (name, t) = self.ident()?;
        if self.scratch.as_deref() == Some(name.as_str()) {
            return Err(self.error_at(&t, format!("'{name}' is the scratch register")));
        }
        match self.registers.iter().position(|r| *r == name) {
            Some(i) => Ok(RegisterRef::new(name, i as u32 + 1)),
            None => Err(self.error_at(&t, format!("undeclared register '{name}'"))),
        }
    }

    fn program(&mut self) -> Result<MacroProgram, MacroError> {
        self.expect_kw("procedure")?;
        let (name, _) = self.ident()?;
        self.expect(Tok::Semi)?;
        let statements = self.block()?;
        if self.peek().tok == Tok::Semi {
            self.next();
        }
        let t = self.next();
        if t.tok != Tok::Eof {
            return Err(self.error_at(&t, format!("unexpected {} after procedure end", t.tok.describe())));
        }
        Ok(MacroProgram {
            name,
            statements,
            register_names: self.registers.clone(),
        })
    }

    fn block(&mut self) -> Result<Block, MacroError> {
        self.expect_kw("begin")?;
        let mut stmts = Vec::new();
        loop {
            self.probes(&mut stmts);
            if self.is_kw("end") {
                self.next();
                return Ok(stmts);
            }
            if self.peek().tok == Tok::Semi {
                // empty statement
                self.next();
                continue;
            }
            stmts.push(self.statement()?);
            self.probes(&mut stmts);
            let t = self.peek().clone();
            match &t.tok {
                Tok::Semi => {
                    self.next();
                }
                Tok::Ident(s) if s.eq_ignore_ascii_case("end") => {}
                other => {
                    return Err(self.error_at(&t, format!("expected ';' or 'end', found {}", other.describe())))
                }
            }
        }
    }

    fn probes(&mut self, stmts: &mut Block) {
        while let Tok::Probe(name) = &self.peek().tok {
            stmts.push(MacroStmt::Probe(name.clone()));
            self.next();
        }
    }

    fn statement(&mut self) -> Result<MacroStmt, MacroError> {
        let t = self.peek().clone();
        if self.is_kw("if") || self.is_kw("while") {
            let is_if = self.is_kw("if");
            self.next();
            let cond = self.condition()?;
            self.expect_kw(if is_if { "then" } else { "do" })?;
            let body = self.block()?;
            return match (is_if, cond) {
                (true, Cond::Pos(r)) => Ok(MacroStmt::IfPos(r, body)),
                (false, Cond::Pos(r)) => Ok(MacroStmt::WhilePos(r, body)),
                (true, Cond::Odd(r)) => Ok(MacroStmt::IfOdd(r, body)),
                (false, Cond::Even(r)) => Ok(MacroStmt::WhileEven(r, body)),
                (true, Cond::Even(_)) => Err(self.error_at(&t, "'if even' is not a supported construct")),
                (false, Cond::Odd(_)) => Err(self.error_at(&t, "'while odd' is not a supported construct")),
            };
        }
        match &t.tok {
            Tok::Ident(_) => self.assignment(),
            other => Err(self.error_at(&t, format!("expected a statement, found {}", other.describe()))),
        }
    }

    fn condition(&mut self) -> Result<Cond, MacroError> {
        for (kw, odd) in [("odd", true), ("even", false)] {
            if self.is_kw(kw) {
                self.next();
                self.expect(Tok::LParen)?;
                let r = self.register()?;
                self.expect(Tok::RParen)?;
                return Ok(if odd { Cond::Odd(r) } else { Cond::Even(r) });
            }
        }
        let r = self.register()?;
        self.expect(Tok::Greater)?;
        let t = self.peek().clone();
        if self.number()? != 0 {
            return Err(self.error_at(&t, "only comparisons against 0 are supported"));
        }
        Ok(Cond::Pos(r))
    }

    fn same_register(&mut self, dst: &RegisterRef) -> Result<(), MacroError> {
        let t = self.peek().clone();
        let r = self.register()?;
        if r != *dst {
            return Err(self.error_at(
                &t,
                format!("expected '{dst}' as the first operand of an update to '{dst}'"),
            ));
        }
        Ok(())
    }

    fn assignment(&mut self) -> Result<MacroStmt, MacroError> {
        let dst = self.register()?;
        self.expect(Tok::Assign)?;
        let t = self.peek().clone();
        match t.tok {
            Tok::Num(m) => {
                self.next();
                self.expect(Tok::Star)?;
                self.same_register(&dst)?;
                let c = if self.peek().tok == Tok::Plus {
                    self.next();
                    self.number()?
                } else {
                    0
                };
                if m == 0 {
                    return Err(self.error_at(&t, "multiplier must be at least 1"));
                }
                Ok(MacroStmt::MulConstAddConst { r: dst, m, c })
            }
            Tok::Ident(_) => {
                let src = self.register()?;
                let op = self.peek().clone();
                let is_div = matches!(&op.tok, Tok::Ident(s) if s.eq_ignore_ascii_case("div"));
                if !matches!(op.tok, Tok::Plus | Tok::Minus) && !is_div {
                    return Ok(MacroStmt::Copy { dst, src });
                }
                if src != dst {
                    return Err(self.error_at(
                        &t,
                        format!("expected '{dst}' as the first operand of an update to '{dst}'"),
                    ));
                }
                self.next();
                if is_div {
                    let m = self.number()?;
                    if m == 0 {
                        return Err(self.error_at(&op, "division by zero"));
                    }
                    return Ok(MacroStmt::DivConst { r: dst, m });
                }
                let plus = op.tok == Tok::Plus;
                if let Tok::Num(c) = self.peek().tok {
                    self.next();
                    return Ok(if plus {
                        MacroStmt::AddConst { r: dst, c }
                    } else {
                        MacroStmt::SubConst { r: dst, c }
                    });
                }
                let src = self.register()?;
                Ok(if plus {
                    MacroStmt::AddReg { dst, src }
                } else {
                    MacroStmt::MonusReg { dst, src }
                })
            }
            ref other => Err(self.error_at(&t, format!("expected an expression, found {}", other.describe()))),
        }
    }
}

enum Cond {
    Pos(RegisterRef),
    Odd(RegisterRef),
    Even(RegisterRef),
}

/// Parse a macro-language procedure.
///
/// Registers are declared either by a header comment of the form
/// `(* input: X in A, Y in B; output: B *)` or by `#registers A,B`; they are
/// numbered from 1 in order of declaration.
pub fn parse_macros(text: &str) -> Result<MacroProgram, MacroError> {
    let (toks, decls) = lex(text)?;
    if let Some(s) = &decls.scratch {
        if let Some((_, line, col)) = decls.registers.iter().find(|(n, ..)| n == s) {
            return Err(MacroError {
                line: *line,
                col: *col,
                message: format!("'{s}' is the scratch register"),
            });
        }
    }
    let mut p = Parser {
        toks,
        pos: 0,
        registers: decls.registers.into_iter().map(|(n, ..)| n).collect(),
        scratch: decls.scratch,
    };
    p.program()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wrap(body: &str) -> String {
        format!("#registers A,B\nprocedure t;\nbegin\n{body}\nend;")
    }

    fn single(body: &str) -> MacroStmt {
        let p = parse_macros(&wrap(body)).unwrap();
        assert_eq!(p.statements.len(), 1, "{:?}", p.statements);
        p.statements.into_iter().next().unwrap()
    }

    fn a() -> RegisterRef {
        RegisterRef::new("A", 1)
    }

    fn b() -> RegisterRef {
        RegisterRef::new("B", 2)
    }

    #[test]
    fn assignment_forms() {
        assert_eq!(
            single("A := 2 * A + 1"),
            MacroStmt::MulConstAddConst { r: a(), m: 2, c: 1 }
        );
        assert_eq!(
            single("A := 8 * A"),
            MacroStmt::MulConstAddConst { r: a(), m: 8, c: 0 }
        );
        assert_eq!(single("B := B div 4"), MacroStmt::DivConst { r: b(), m: 4 });
        assert_eq!(single("A := A + 1"), MacroStmt::AddConst { r: a(), c: 1 });
        assert_eq!(single("B := B - 1"), MacroStmt::SubConst { r: b(), c: 1 });
        assert_eq!(single("A := A + B"), MacroStmt::AddReg { dst: a(), src: b() });
        assert_eq!(single("A := A - B"), MacroStmt::MonusReg { dst: a(), src: b() });
        assert_eq!(single("B := A"), MacroStmt::Copy { dst: b(), src: a() });
    }

    #[test]
    fn control_forms_and_case() {
        assert!(matches!(single("IF odd(B) THEN BEGIN A := A + 1 END"), MacroStmt::IfOdd(..)));
        assert!(matches!(single("while even(A) do begin A := A div 2 end"), MacroStmt::WhileEven(..)));
        assert!(matches!(single("while B > 0 do begin end"), MacroStmt::WhilePos(..)));
        assert!(matches!(single("if B > 0 then begin end"), MacroStmt::IfPos(..)));
    }

    #[test]
    fn header_comment_declares_registers() {
        let p = parse_macros(
            "procedure m; (* input: X in A, Y in B; output: B *)\nbegin B := A end;",
        )
        .unwrap();
        assert_eq!(p.register_names, vec!["A", "B"]);
        assert_eq!(p.machine_size(), 3);
    }

    #[test]
    fn probes_become_statements() {
        let p = parse_macros(&wrap("A := A + 1; (* probe: here *)\n B := B + 1\n(* probe: end *)"))
            .unwrap();
        assert_eq!(p.statements[1], MacroStmt::Probe("here".into()));
        assert_eq!(p.statements[3], MacroStmt::Probe("end".into()));
    }

    #[test]
    fn undeclared_register_is_an_error() {
        let e = parse_macros(&wrap("C := A")).unwrap_err();
        assert!(e.message.contains("undeclared register 'C'"));
        assert_eq!((e.line, e.col), (4, 1));
    }

    #[test]
    fn scratch_register_cannot_be_named() {
        let text = "#registers A,B\n#scratch S\nprocedure t;\nbegin A := S end;";
        let e = parse_macros(text).unwrap_err();
        assert!(e.message.contains("scratch"));
    }

    #[test]
    fn syntax_errors_have_positions() {
        let e = parse_macros(&wrap("A := A * 2")).unwrap_err();
        assert_eq!(e.line, 4);
        let e = parse_macros(&wrap("A := 0 * A")).unwrap_err();
        assert!(e.message.contains("at least 1"));
        let e = parse_macros(&wrap("A := A div 0")).unwrap_err();
        assert!(e.message.contains("division by zero"));
        let e = parse_macros(&wrap("A := A + 1 B := B + 1")).unwrap_err();
        assert!(e.message.contains("expected ';' or 'end'"));
        let e = parse_macros(&wrap("if even(A) then begin end")).unwrap_err();
        assert!(e.message.contains("if even"));
    }

    #[test]
    fn display_round_trips() {
        let text = wrap(
            "if B > 0 then begin A := 2 * A + 1; (* probe: p *) while even(A) do begin A := A div 2; B := B - 1 end end",
        );
        let p = parse_macros(&text).unwrap();
        let again = parse_macros(&p.to_string()).unwrap();
        assert_eq!(p, again);
    }
}
