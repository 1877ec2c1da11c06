//! Concrete formula syntax, the inverse of `Expr::display`:
//!
//! ```text
//! formula  := ("[" vars "]" ".")? expr
//! expr     := or ("implies" expr)?
//! or       := and ("or" and)*
//! and      := unary ("and" unary)*
//! unary    := "not" unary | primary
//! primary  := "top" | "bot" | "(" expr ")" | quant | subst | atom
//! quant    := ("forall" | "exists" | "@" name) binder "(" expr ("," expr)* ")"
//! binder   := "pi" "[" vars "]" | "via" "[" morphism "]"
//! subst    := "subst" "[" morphism "]" "(" expr ")"
//! morphism := vars ";" (var ":" sort ":=" term),*
//! atom     := rel "(" terms ")" | term "=" term | term "in" term
//! ```
//!
//! `pi[vars]` extends the current context; `via` gives an arbitrary context
//! morphism whose target is the current context. A name is a relation atom
//! exactly when the signature declares a relation of that name.

use toposlos_core::fol::{Context, CtxMorphism, Signature, Term};
use toposlos_core::formula::{check_expr, Expr, Formula, QuantifierRegistry, EXISTS, FORALL};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Sym(&'static str),
}

fn tokenize(src: &str) -> CliResult<Vec<(Tok, usize)>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let col = i + 1;
        if c.is_alphanumeric() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), col));
            continue;
        }
        let sym = match c {
            ':' if chars.get(i + 1) == Some(&'=') => ":=",
            ':' => ":",
            '(' => "(",
            ')' => ")",
            '[' => "[",
            ']' => "]",
            ',' => ",",
            ';' => ";",
            '.' => ".",
            '@' => "@",
            '=' => "=",
            _ => return Err(CliError::Syntax { column: col, message: format!("unexpected character '{c}'") }),
        };
        i += sym.len();
        out.push((Tok::Sym(sym), col));
    }
    Ok(out)
}

const KEYWORDS: &[&str] =
    &["forall", "exists", "pi", "via", "subst", "not", "and", "or", "implies", "top", "bot", "in"];

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
    sig: &'a Signature,
}

impl<'a> Parser<'a> {
    fn column(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |t| t.1)
    }

    fn err<T>(&self, message: impl Into<String>) -> CliResult<T> {
        Err(CliError::Syntax { column: self.column(), message: message.into() })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|t| &t.0)
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Sym(x)) if *x == s)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(x)) if x == k)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        let hit = self.is_sym(s);
        if hit {
            self.pos += 1;
        }
        hit
    }

    fn eat_kw(&mut self, k: &str) -> bool {
        let hit = self.is_kw(k);
        if hit {
            self.pos += 1;
        }
        hit
    }

    fn expect(&mut self, s: &str) -> CliResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.err(format!("expected '{s}'"))
        }
    }

    fn ident(&mut self) -> CliResult<String> {
        match self.peek() {
            Some(Tok::Ident(x)) if !KEYWORDS.contains(&x.as_str()) => {
                let x = x.clone();
                self.pos += 1;
                Ok(x)
            }
            _ => self.err("expected a name"),
        }
    }

    fn context_error<T>(&self, e: toposlos_core::Error) -> CliResult<T> {
        self.err(e.to_string())
    }

    /// `x:s, y:t` up to (not including) `stop`.
    fn vars(&mut self, stop: &str) -> CliResult<Vec<(String, String)>> {
        let mut vars = Vec::new();
        if self.is_sym(stop) {
            return Ok(vars);
        }
        loop {
            let n = self.ident()?;
            self.expect(":")?;
            let s = self.ident()?;
            vars.push((n, s));
            if !self.eat_sym(",") {
                return Ok(vars);
            }
        }
    }

    fn context(&mut self, vars: Vec<(String, String)>) -> CliResult<Context> {
        Context::from_vars(vars).or_else(|e| self.context_error(e))
    }

    fn formula(&mut self) -> CliResult<Formula> {
        let ctx = if self.eat_sym("[") {
            let vars = self.vars("]")?;
            self.expect("]")?;
            self.expect(".")?;
            self.context(vars)?
        } else {
            Context::empty()
        };
        let e = self.expr(&ctx)?;
        if self.pos < self.toks.len() {
            return self.err("trailing input");
        }
        Ok(Formula::new(ctx, e))
    }

    fn expr(&mut self, ctx: &Context) -> CliResult<Expr> {
        let a = self.disj(ctx)?;
        if self.eat_kw("implies") {
            return Ok(Expr::implies(a, self.expr(ctx)?));
        }
        Ok(a)
    }

    fn disj(&mut self, ctx: &Context) -> CliResult<Expr> {
        let mut a = self.conj(ctx)?;
        while self.eat_kw("or") {
            a = Expr::or(a, self.conj(ctx)?);
        }
        Ok(a)
    }

    fn conj(&mut self, ctx: &Context) -> CliResult<Expr> {
        let mut a = self.unary(ctx)?;
        while self.eat_kw("and") {
            a = Expr::and(a, self.unary(ctx)?);
        }
        Ok(a)
    }

    fn unary(&mut self, ctx: &Context) -> CliResult<Expr> {
        if self.eat_kw("not") {
            return Ok(Expr::not(self.unary(ctx)?));
        }
        self.primary(ctx)
    }

    fn primary(&mut self, ctx: &Context) -> CliResult<Expr> {
        if self.eat_kw("top") {
            return Ok(Expr::Top);
        }
        if self.eat_kw("bot") {
            return Ok(Expr::Bot);
        }
        if self.eat_sym("(") {
            let e = self.expr(ctx)?;
            self.expect(")")?;
            return Ok(e);
        }
        if self.eat_kw("forall") {
            return self.quantifier(FORALL.to_string(), ctx);
        }
        if self.eat_kw("exists") {
            return self.quantifier(EXISTS.to_string(), ctx);
        }
        if self.eat_sym("@") {
            let name = self.ident()?;
            return self.quantifier(name, ctx);
        }
        if self.eat_kw("subst") {
            self.expect("[")?;
            let g = self.morphism()?;
            self.expect("]")?;
            if g.src.sorts() != ctx.sorts() {
                return self.err(format!("substitution source {} does not match the context {ctx}", g.src));
            }
            self.expect("(")?;
            let body = self.expr(&g.dst)?;
            self.expect(")")?;
            return Ok(Expr::pullback(g, body));
        }
        self.atom(ctx)
    }

    fn quantifier(&mut self, name: String, ctx: &Context) -> CliResult<Expr> {
        let along = if self.eat_kw("pi") {
            self.expect("[")?;
            let extra = self.vars("]")?;
            self.expect("]")?;
            let inner = self.context(ctx.vars.iter().cloned().chain(extra).collect())?;
            CtxMorphism::prefix_projection(&inner, ctx.len()).or_else(|e| self.context_error(e))?
        } else if self.eat_kw("via") {
            self.expect("[")?;
            let g = self.morphism()?;
            self.expect("]")?;
            if g.dst.sorts() != ctx.sorts() {
                return self.err(format!("quantifier target {} does not match the context {ctx}", g.dst));
            }
            g
        } else {
            return self.err("expected 'pi' or 'via'");
        };
        self.expect("(")?;
        let mut args = vec![self.expr(&along.src)?];
        while self.eat_sym(",") {
            args.push(self.expr(&along.src)?);
        }
        self.expect(")")?;
        Ok(Expr::quant(&name, along, args))
    }

    fn morphism(&mut self) -> CliResult<CtxMorphism> {
        let src_vars = self.vars(";")?;
        let src = self.context(src_vars)?;
        self.expect(";")?;
        let mut dst = Vec::new();
        let mut terms = Vec::new();
        if !self.is_sym("]") {
            loop {
                let n = self.ident()?;
                self.expect(":")?;
                let s = self.ident()?;
                self.expect(":=")?;
                terms.push(self.term(&src)?);
                dst.push((n, s));
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        let dst = self.context(dst)?;
        CtxMorphism::new(self.sig, src, dst, terms).or_else(|e| self.context_error(e))
    }

    fn atom(&mut self, ctx: &Context) -> CliResult<Expr> {
        if let (Some(Tok::Ident(r)), Some(Tok::Sym("("))) = (self.peek(), self.peek_at(1)) {
            if self.sig.relations.contains_key(r) {
                let r = r.clone();
                self.pos += 2;
                let args = self.term_list(ctx)?;
                return Ok(Expr::rel(&r, args));
            }
        }
        let a = self.term(ctx)?;
        if self.eat_sym("=") {
            return Ok(Expr::eq(a, self.term(ctx)?));
        }
        if self.eat_kw("in") {
            return Ok(Expr::member(a, self.term(ctx)?));
        }
        self.err("expected '=' or 'in' after a term")
    }

    /// Arguments after an opening parenthesis, consuming the closing one.
    fn term_list(&mut self, ctx: &Context) -> CliResult<Vec<Term>> {
        let mut args = Vec::new();
        if self.eat_sym(")") {
            return Ok(args);
        }
        loop {
            args.push(self.term(ctx)?);
            if self.eat_sym(")") {
                return Ok(args);
            }
            self.expect(",")?;
        }
    }

    fn term(&mut self, ctx: &Context) -> CliResult<Term> {
        let name = self.ident()?;
        if self.eat_sym("(") {
            let args = self.term_list(ctx)?;
            return Ok(Term::App(name, args));
        }
        match ctx.vars.iter().rposition(|v| v.0 == name) {
            Some(i) => Ok(Term::Var(i)),
            None => Ok(Term::App(name, Vec::new())),
        }
    }
}

/// Parses and type-checks a formula.
pub fn parse_formula(src: &str, sig: &Signature, reg: &QuantifierRegistry) -> CliResult<Formula> {
    let toks = tokenize(src)?;
    let mut p = Parser { end: src.chars().count() + 1, toks, pos: 0, sig };
    let phi = p.formula()?;
    check_expr(sig, reg, &phi.ctx, &phi.expr)
        .map_err(|e| CliError::invalid(format!("formula '{src}'"), e.to_string()))?;
    Ok(phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use toposlos_core::corpus::{context, corpus_sig, random_formula, rng, FormulaConfig};

    fn sig() -> Signature {
        (*corpus_sig()).clone()
    }

    #[test]
    fn parses_the_displayed_forms() {
        let reg = QuantifierRegistry::standard();
        for src in [
            "[x:s]. forall pi[y:s] ((e(x, y) implies r(y)))",
            "[]. @conj pi[] (top, bot)",
            "[x:s]. subst[x:s; x:s := f(x), y:s := c] (f(c) = y)",
            "[x:s]. not (r(x) or exists pi[y:s] (e(y, f(x))))",
        ] {
            let phi = parse_formula(src, &sig(), &reg).unwrap();
            assert_eq!(phi.to_string(), src);
        }
    }

    #[test]
    fn display_round_trips_on_random_formulas() {
        let reg = QuantifierRegistry::standard();
        let mut r = rng(9);
        for k in 0..300 {
            let ctx = context(k % 3);
            let phi = Formula::new(ctx.clone(), random_formula(&mut r, &ctx, 3, &FormulaConfig::default()));
            let back = parse_formula(&phi.to_string(), &sig(), &reg).unwrap();
            assert_eq!(back, phi, "{phi}");
        }
    }

    #[test]
    fn reports_columns() {
        let reg = QuantifierRegistry::standard();
        let Err(CliError::Syntax { column, .. }) = parse_formula("[x:s]. r(x) and", &sig(), &reg) else {
            panic!("expected a syntax error");
        };
        assert_eq!(column, 16);
        assert!(parse_formula("[x:s]. r(x, x)", &sig(), &reg).is_err());
        assert!(parse_formula("[x:s]. x ? x", &sig(), &reg).is_err());
    }
}
