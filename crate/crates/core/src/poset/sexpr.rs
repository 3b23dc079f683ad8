//! Text format for poset presentations: one s-expression per file.
//!
//! ```text
//! (chain omega :delta (const 2))
//! (antichain omega :delta (affine 1 2))
//! (antichain 2 :delta (const 2))                 ; finite antichain sugar
//! (finite :nodes [a b r] :covers [(a r) (b r)] :delta [2 2 3])
//! (product A B)
//! (sum A B ...)
//! (omega-sum :fiber <finite> :delta <rule>)
//! (omega-sum :fiber growing-chains :delta <rule>)
//! (chain-with-fibers :fiber <finite-or-antichain> :delta <rule>)
//! ```
//! `<rule>` is `(const c)`, `(table [v0 v1 ...] :default c)` or
//! `(affine a b)` meaning `n ↦ a·n + b`.

use super::{DeltaRule, FiberSpec, FiniteSpec, Presentation, SummandRule};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Sexpr {
    Sym(String),
    Num(u32),
    List(Vec<Sexpr>),
    Bracket(Vec<Sexpr>),
}

fn tokenize(s: &str) -> Result<Vec<String>> {
    let mut tokens = Vec::new();
    let mut cur = String::new();
    let mut chars = s.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            ';' => {
                // comment to end of line
                for c2 in chars.by_ref() {
                    if c2 == '\n' {
                        break;
                    }
                }
            }
            '(' | ')' | '[' | ']' => {
                if !cur.is_empty() {
                    tokens.push(std::mem::take(&mut cur));
                }
                tokens.push(c.to_string());
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    tokens.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        tokens.push(cur);
    }
    Ok(tokens)
}

fn parse_sexpr(tokens: &[String], pos: &mut usize) -> Result<Sexpr> {
    if *pos >= tokens.len() {
        return Err(Error::Parse("unexpected end of input".into()));
    }
    let tok = &tokens[*pos];
    *pos += 1;
    match tok.as_str() {
        "(" | "[" => {
            let close = if tok == "(" { ")" } else { "]" };
            let mut items = Vec::new();
            loop {
                if *pos >= tokens.len() {
                    return Err(Error::Parse(format!("missing `{close}`")));
                }
                if tokens[*pos] == close {
                    *pos += 1;
                    break;
                }
                items.push(parse_sexpr(tokens, pos)?);
            }
            Ok(if tok == "(" { Sexpr::List(items) } else { Sexpr::Bracket(items) })
        }
        ")" | "]" => Err(Error::Parse(format!("unexpected `{tok}`"))),
        t => {
            if let Ok(n) = t.parse::<u32>() {
                Ok(Sexpr::Num(n))
            } else {
                Ok(Sexpr::Sym(t.to_string()))
            }
        }
    }
}

fn expect_sym(e: &Sexpr) -> Result<&str> {
    match e {
        Sexpr::Sym(s) => Ok(s),
        _ => Err(Error::Parse(format!("expected symbol, got {e:?}"))),
    }
}

fn expect_num(e: &Sexpr) -> Result<u32> {
    match e {
        Sexpr::Num(n) => Ok(*n),
        _ => Err(Error::Parse(format!("expected number, got {e:?}"))),
    }
}

/// Pull `:key value` pairs out of a tail of list items.
fn keyword_args(items: &[Sexpr]) -> Result<Vec<(&str, &Sexpr)>> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let key = expect_sym(&items[i])?;
        if !key.starts_with(':') {
            return Err(Error::Parse(format!("expected keyword, got `{key}`")));
        }
        if i + 1 >= items.len() {
            return Err(Error::Parse(format!("keyword `{key}` missing a value")));
        }
        out.push((key, &items[i + 1]));
        i += 2;
    }
    Ok(out)
}

fn parse_rule(e: &Sexpr) -> Result<DeltaRule> {
    let Sexpr::List(items) = e else {
        return Err(Error::Parse("delta rule must be a list".into()));
    };
    if items.is_empty() {
        return Err(Error::Parse("empty delta rule".into()));
    }
    match expect_sym(&items[0])? {
        "const" => Ok(DeltaRule::Const(expect_num(&items[1])?)),
        "affine" => Ok(DeltaRule::Affine {
            a: expect_num(&items[1])?,
            b: expect_num(&items[2])?,
        }),
        "table" => {
            let Sexpr::Bracket(vals) = &items[1] else {
                return Err(Error::Parse("table values must be bracketed".into()));
            };
            let values: Vec<u32> = vals.iter().map(expect_num).collect::<Result<_>>()?;
            let mut default = None;
            for (k, v) in keyword_args(&items[2..])? {
                if k == ":default" {
                    default = Some(expect_num(v)?);
                }
            }
            let default =
                default.ok_or_else(|| Error::Parse("table rule needs :default".into()))?;
            Ok(DeltaRule::Table { values, default })
        }
        other => Err(Error::Parse(format!("unknown delta rule `{other}`"))),
    }
}

fn parse_finite(items: &[Sexpr]) -> Result<FiniteSpec> {
    let mut names: Option<Vec<String>> = None;
    let mut covers_raw: Option<&Sexpr> = None;
    let mut delta: Option<Vec<u32>> = None;
    for (k, v) in keyword_args(items)? {
        match k {
            ":nodes" => {
                let Sexpr::Bracket(ns) = v else {
                    return Err(Error::Parse(":nodes must be bracketed".into()));
                };
                names = Some(
                    ns.iter()
                        .map(|e| expect_sym(e).map(str::to_string))
                        .collect::<Result<_>>()?,
                );
            }
            ":covers" => covers_raw = Some(v),
            ":delta" => {
                let Sexpr::Bracket(ds) = v else {
                    return Err(Error::Parse(":delta must be bracketed for finite posets".into()));
                };
                delta = Some(ds.iter().map(expect_num).collect::<Result<_>>()?);
            }
            other => return Err(Error::Parse(format!("unknown key `{other}` in finite"))),
        }
    }
    let names = names.ok_or_else(|| Error::Parse("finite poset needs :nodes".into()))?;
    let delta = delta.ok_or_else(|| Error::Parse("finite poset needs :delta".into()))?;
    let mut covers = Vec::new();
    if let Some(Sexpr::Bracket(pairs)) = covers_raw {
        for p in pairs {
            let Sexpr::List(ab) = p else {
                return Err(Error::Parse("cover must be a pair (a b)".into()));
            };
            if ab.len() != 2 {
                return Err(Error::Parse("cover must be a pair (a b)".into()));
            }
            let ia = name_index(&names, expect_sym(&ab[0])?)?;
            let ib = name_index(&names, expect_sym(&ab[1])?)?;
            covers.push((ia, ib));
        }
    }
    Ok(FiniteSpec::new(names, covers, delta))
}

fn name_index(names: &[String], name: &str) -> Result<u32> {
    names
        .iter()
        .position(|n| n == name)
        .map(|i| i as u32)
        .ok_or_else(|| Error::Parse(format!("unknown node name `{name}`")))
}

fn parse_expr(e: &Sexpr) -> Result<Presentation> {
    let Sexpr::List(items) = e else {
        return Err(Error::Parse("presentation must be a list".into()));
    };
    if items.is_empty() {
        return Err(Error::Parse("empty presentation".into()));
    }
    match expect_sym(&items[0])? {
        "chain" => {
            // (chain omega :delta <rule>)
            if expect_sym(&items[1])? != "omega" {
                return Err(Error::Parse("only (chain omega ...) is supported".into()));
            }
            let mut delta = None;
            for (k, v) in keyword_args(&items[2..])? {
                if k == ":delta" {
                    delta = Some(parse_rule(v)?);
                }
            }
            Ok(Presentation::OmegaChain {
                delta: delta.ok_or_else(|| Error::Parse("chain needs :delta".into()))?,
            })
        }
        "antichain" => match &items[1] {
            Sexpr::Sym(s) if s == "omega" => {
                let mut delta = None;
                for (k, v) in keyword_args(&items[2..])? {
                    if k == ":delta" {
                        delta = Some(parse_rule(v)?);
                    }
                }
                Ok(Presentation::OmegaAntichain {
                    delta: delta.ok_or_else(|| Error::Parse("antichain needs :delta".into()))?,
                })
            }
            Sexpr::Num(k) => {
                // finite antichain sugar
                let mut delta = None;
                for (key, v) in keyword_args(&items[2..])? {
                    if key == ":delta" {
                        delta = Some(parse_rule(v)?);
                    }
                }
                let rule = delta.ok_or_else(|| Error::Parse("antichain needs :delta".into()))?;
                let deltas: Vec<u32> = (0..*k).map(|n| rule.eval(n)).collect();
                Ok(Presentation::FiniteExplicit(FiniteSpec {
                    names: (0..*k).map(|i| format!("x{i}")).collect(),
                    covers: vec![],
                    delta: deltas,
                }))
            }
            other => Err(Error::Parse(format!("bad antichain size {other:?}"))),
        },
        "finite" => Ok(Presentation::FiniteExplicit(parse_finite(&items[1..])?)),
        "product" => {
            if items.len() != 3 {
                return Err(Error::Parse("product takes exactly two factors".into()));
            }
            Ok(Presentation::product(parse_expr(&items[1])?, parse_expr(&items[2])?))
        }
        "sum" => {
            let parts: Vec<Presentation> =
                items[1..].iter().map(parse_expr).collect::<Result<_>>()?;
            Ok(Presentation::DisjointSum(parts))
        }
        "omega-sum" => {
            let mut summand = None;
            let mut delta = None;
            for (k, v) in keyword_args(&items[1..])? {
                match k {
                    ":fiber" => {
                        summand = Some(match v {
                            Sexpr::Sym(s) if s == "growing-chains" => SummandRule::GrowingChains,
                            Sexpr::List(inner) if !inner.is_empty() => {
                                if expect_sym(&inner[0])? == "finite" {
                                    SummandRule::Constant(parse_finite(&inner[1..])?)
                                } else {
                                    return Err(Error::Parse(
                                        "omega-sum fiber must be (finite ...) or growing-chains"
                                            .into(),
                                    ));
                                }
                            }
                            _ => {
                                return Err(Error::Parse(
                                    "omega-sum fiber must be (finite ...) or growing-chains".into(),
                                ))
                            }
                        });
                    }
                    ":delta" => delta = Some(parse_rule(v)?),
                    other => return Err(Error::Parse(format!("unknown key `{other}`"))),
                }
            }
            Ok(Presentation::OmegaSum {
                summand: summand.ok_or_else(|| Error::Parse("omega-sum needs :fiber".into()))?,
                delta,
            })
        }
        "chain-with-fibers" => {
            let mut fiber = None;
            let mut delta = None;
            for (k, v) in keyword_args(&items[1..])? {
                match k {
                    ":fiber" => {
                        fiber = Some(match v {
                            Sexpr::List(inner) if !inner.is_empty() => {
                                match expect_sym(&inner[0])? {
                                    "finite" => FiberSpec::Finite(parse_finite(&inner[1..])?),
                                    "antichain" => match &inner[1] {
                                        Sexpr::Sym(s) if s == "omega" => {
                                            let mut d = None;
                                            for (k2, v2) in keyword_args(&inner[2..])? {
                                                if k2 == ":delta" {
                                                    d = Some(parse_rule(v2)?);
                                                }
                                            }
                                            FiberSpec::OmegaAntichain {
                                                delta: d.ok_or_else(|| {
                                                    Error::Parse("fiber antichain needs :delta".into())
                                                })?,
                                            }
                                        }
                                        Sexpr::Num(k2) => {
                                            let mut d = None;
                                            for (key, v2) in keyword_args(&inner[2..])? {
                                                if key == ":delta" {
                                                    d = Some(parse_rule(v2)?);
                                                }
                                            }
                                            let rule = d.ok_or_else(|| {
                                                Error::Parse("fiber antichain needs :delta".into())
                                            })?;
                                            FiberSpec::Finite(FiniteSpec {
                                                names: (0..*k2).map(|i| format!("x{i}")).collect(),
                                                covers: vec![],
                                                delta: (0..*k2).map(|n| rule.eval(n)).collect(),
                                            })
                                        }
                                        _ => {
                                            return Err(Error::Parse(
                                                "bad fiber antichain".into(),
                                            ))
                                        }
                                    },
                                    other => {
                                        return Err(Error::Parse(format!(
                                            "bad fiber kind `{other}`"
                                        )))
                                    }
                                }
                            }
                            _ => return Err(Error::Parse("bad :fiber".into())),
                        });
                    }
                    ":delta" => delta = Some(parse_rule(v)?),
                    other => return Err(Error::Parse(format!("unknown key `{other}`"))),
                }
            }
            Ok(Presentation::ChainWithFibers {
                fiber: fiber.ok_or_else(|| Error::Parse("chain-with-fibers needs :fiber".into()))?,
                delta: delta.ok_or_else(|| Error::Parse("chain-with-fibers needs :delta".into()))?,
            })
        }
        other => Err(Error::Parse(format!("unknown combinator `{other}`"))),
    }
}

/// Parse a presentation from its textual form and validate it.
pub fn parse_presentation(text: &str) -> Result<Presentation> {
    let tokens = tokenize(text)?;
    let mut pos = 0;
    let e = parse_sexpr(&tokens, &mut pos)?;
    if pos != tokens.len() {
        return Err(Error::Parse("trailing input after presentation".into()));
    }
    let p = parse_expr(&e)?;
    p.validate()?;
    Ok(p)
}

fn print_rule(r: &DeltaRule) -> String {
    match r {
        DeltaRule::Const(c) => format!("(const {c})"),
        DeltaRule::Table { values, default } => {
            let vals: Vec<String> = values.iter().map(|v| v.to_string()).collect();
            format!("(table [{}] :default {default})", vals.join(" "))
        }
        DeltaRule::Affine { a, b } => format!("(affine {a} {b})"),
    }
}

fn print_finite(f: &FiniteSpec) -> String {
    let covers: Vec<String> = f
        .covers
        .iter()
        .map(|(a, b)| format!("({} {})", f.names[*a as usize], f.names[*b as usize]))
        .collect();
    let deltas: Vec<String> = f.delta.iter().map(|d| d.to_string()).collect();
    format!(
        "(finite :nodes [{}] :covers [{}] :delta [{}])",
        f.names.join(" "),
        covers.join(" "),
        deltas.join(" ")
    )
}

/// Canonical textual form; `parse_presentation ∘ print_presentation = id`.
pub fn print_presentation(p: &Presentation) -> String {
    match p {
        Presentation::FiniteExplicit(f) => print_finite(f),
        Presentation::OmegaChain { delta } => format!("(chain omega :delta {})", print_rule(delta)),
        Presentation::OmegaAntichain { delta } => {
            format!("(antichain omega :delta {})", print_rule(delta))
        }
        Presentation::Product(a, b) => {
            format!("(product {} {})", print_presentation(a), print_presentation(b))
        }
        Presentation::DisjointSum(parts) => {
            let inner: Vec<String> = parts.iter().map(print_presentation).collect();
            format!("(sum {})", inner.join(" "))
        }
        Presentation::OmegaSum { summand, delta } => {
            let fib = match summand {
                SummandRule::Constant(f) => print_finite(f),
                SummandRule::GrowingChains => "growing-chains".to_string(),
            };
            match delta {
                Some(d) => format!("(omega-sum :fiber {fib} :delta {})", print_rule(d)),
                None => format!("(omega-sum :fiber {fib})"),
            }
        }
        Presentation::ChainWithFibers { fiber, delta } => {
            let fib = match fiber {
                FiberSpec::Finite(f) => print_finite(f),
                FiberSpec::OmegaAntichain { delta } => {
                    format!("(antichain omega :delta {})", print_rule(delta))
                }
            };
            format!(
                "(chain-with-fibers :fiber {fib} :delta {})",
                print_rule(delta)
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_print_roundtrip() {
        let sources = [
            "(chain omega :delta (const 2))",
            "(antichain omega :delta (affine 1 2))",
            "(antichain omega :delta (table [2 3 5] :default 2))",
            "(finite :nodes [a b r] :covers [(a r) (b r)] :delta [2 2 3])",
            "(product (chain omega :delta (const 2)) (antichain 2 :delta (const 2)))",
            "(sum (chain omega :delta (const 2)) (chain omega :delta (const 3)))",
            "(omega-sum :fiber growing-chains :delta (const 2))",
            "(omega-sum :fiber (finite :nodes [a b] :covers [(a b)] :delta [2 2]) :delta (const 3))",
            "(chain-with-fibers :fiber (antichain omega :delta (const 3)) :delta (const 3))",
            "(chain-with-fibers :fiber (finite :nodes [q] :covers [] :delta [2]) :delta (const 2))",
        ];
        for src in sources {
            let p = parse_presentation(src).unwrap_or_else(|e| panic!("{src}: {e}"));
            let printed = print_presentation(&p);
            let p2 = parse_presentation(&printed).unwrap();
            assert_eq!(p, p2, "roundtrip through `{printed}`");
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse_presentation("(chain omega :delta (const 1))").is_err());
        assert!(parse_presentation("(finite :nodes [a] :covers [(a a)] :delta [2 2])").is_err());
        assert!(parse_presentation("(omega-sum :fiber growing-chains)").is_err());
        assert!(parse_presentation("(bogus)").is_err());
    }
}
