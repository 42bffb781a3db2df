//! The setkey configuration dialect.
//!
//! ```text
//! flush;
//! spdflush;
//! add <src> <dst> <ah|esp> <0xSPI> (-A <hmac-md5|hmac-sha1> | -E <aes-cbc|3des-cbc>) <0xKEY>;
//! spdadd <src> <dst> any -P <in|out> ipsec <proto>/transport//require [<proto>/transport//require];
//! ```
//!
//! `#` starts a comment that runs to end of line. Statements may span lines
//! and end at `;`.

use std::fmt::{self, Write as _};

use thiserror::Error;

use super::{IpsecError, IpsecProtocol, PolicyDirection, SecurityAssociation, SecurityDatabases, SecurityPolicy};
use crate::crypto::{Algorithm, AuthAlgorithm, CipherAlgorithm, CryptoError};
use crate::wire::Address;

/// Two-host MD5/AES configuration for 192.168.2.12 talking to 192.168.2.22.
pub const REFERENCE_CONF: &str = include_str!("../../data/reference-setkey.conf");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {kind}")]
pub struct SetkeyError {
    pub line: usize,
    pub column: usize,
    pub kind: SetkeyErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SetkeyErrorKind {
    #[error("unknown keyword '{0}'")]
    UnknownKeyword(String),
    #[error("expected {expected}, found '{found}'")]
    Expected { expected: &'static str, found: String },
    #[error("statement ended early: expected {0}")]
    MissingToken(&'static str),
    #[error("unexpected trailing token '{0}'")]
    Trailing(String),
    #[error("missing ';' at end of input")]
    Unterminated,
    #[error("invalid address '{0}'")]
    BadAddress(String),
    #[error("invalid hex value '{0}'")]
    BadHex(String),
    #[error("hex key '{0}' has an odd number of digits")]
    OddHexKey(String),
    #[error("unknown algorithm '{0}'")]
    UnknownAlgorithm(String),
    #[error("{protocol} SA cannot take {flag}")]
    FlagMismatch { protocol: IpsecProtocol, flag: &'static str },
    #[error(transparent)]
    KeyLength(CryptoError),
    #[error("duplicate SA for dst {dst} spi 0x{spi:x} {protocol}")]
    DuplicateSa { dst: Address, spi: u32, protocol: IpsecProtocol },
    #[error("invalid transform '{0}'; only <ah|esp>/transport//require is supported")]
    BadTransform(String),
    #[error("policy has no transforms")]
    EmptyPolicy,
}

#[derive(Debug, Clone)]
struct Token<'a> {
    text: &'a str,
    line: usize,
    column: usize,
}

fn tokenize(text: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let code = line.split('#').next().unwrap_or("");
        let mut start: Option<usize> = None;
        let mut push = |s: usize, e: usize| {
            out.push(Token {
                text: &code[s..e],
                line: lineno + 1,
                column: s + 1,
            })
        };
        for (i, c) in code.char_indices() {
            if c.is_whitespace() || c == ';' {
                if let Some(s) = start.take() {
                    push(s, i);
                }
                if c == ';' {
                    push(i, i + 1);
                }
            } else if start.is_none() {
                start = Some(i);
            }
        }
        if let Some(s) = start {
            push(s, code.len());
        }
    }
    out
}

struct Statement<'a> {
    tokens: Vec<Token<'a>>,
    end: Token<'a>,
    pos: usize,
}

impl<'a> Statement<'a> {
    fn err_at(tok: &Token<'_>, kind: SetkeyErrorKind) -> SetkeyError {
        SetkeyError {
            line: tok.line,
            column: tok.column,
            kind,
        }
    }

    fn next(&mut self, what: &'static str) -> Result<Token<'a>, SetkeyError> {
        let tok = self
            .tokens
            .get(self.pos)
            .cloned()
            .ok_or_else(|| Self::err_at(&self.end, SetkeyErrorKind::MissingToken(what)))?;
        self.pos += 1;
        Ok(tok)
    }

    fn peek(&self) -> Option<&Token<'a>> {
        self.tokens.get(self.pos)
    }

    fn expect(&mut self, literal: &'static str) -> Result<Token<'a>, SetkeyError> {
        let tok = self.next(literal)?;
        if tok.text != literal {
            return Err(Self::err_at(
                &tok,
                SetkeyErrorKind::Expected {
                    expected: literal,
                    found: tok.text.to_string(),
                },
            ));
        }
        Ok(tok)
    }

    fn address(&mut self) -> Result<Address, SetkeyError> {
        let tok = self.next("address")?;
        tok.text
            .parse()
            .map_err(|_| Self::err_at(&tok, SetkeyErrorKind::BadAddress(tok.text.to_string())))
    }

    fn finish(&self) -> Result<(), SetkeyError> {
        match self.peek() {
            Some(tok) => Err(Self::err_at(tok, SetkeyErrorKind::Trailing(tok.text.to_string()))),
            None => Ok(()),
        }
    }
}

fn hex_digits<'t>(tok: &Token<'t>) -> Result<&'t str, SetkeyError> {
    let digits = tok
        .text
        .strip_prefix("0x")
        .or_else(|| tok.text.strip_prefix("0X"))
        .filter(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_hexdigit()))
        .ok_or_else(|| Statement::err_at(tok, SetkeyErrorKind::BadHex(tok.text.to_string())))?;
    Ok(digits)
}

fn parse_spi(tok: &Token<'_>) -> Result<u32, SetkeyError> {
    let digits = hex_digits(tok)?;
    u32::from_str_radix(digits, 16).map_err(|_| Statement::err_at(tok, SetkeyErrorKind::BadHex(tok.text.to_string())))
}

fn parse_key(tok: &Token<'_>) -> Result<Vec<u8>, SetkeyError> {
    let digits = hex_digits(tok)?;
    if digits.len() % 2 != 0 {
        return Err(Statement::err_at(tok, SetkeyErrorKind::OddHexKey(tok.text.to_string())));
    }
    hex::decode(digits).map_err(|_| Statement::err_at(tok, SetkeyErrorKind::BadHex(tok.text.to_string())))
}

fn parse_add(st: &mut Statement<'_>, dbs: &mut SecurityDatabases) -> Result<(), SetkeyError> {
    let src = st.address()?;
    let dst = st.address()?;
    let proto_tok = st.next("ah or esp")?;
    let protocol = match proto_tok.text {
        "ah" => IpsecProtocol::Ah,
        "esp" => IpsecProtocol::Esp,
        other => {
            return Err(Statement::err_at(
                &proto_tok,
                SetkeyErrorKind::Expected {
                    expected: "ah or esp",
                    found: other.to_string(),
                },
            ))
        }
    };
    let spi = parse_spi(&st.next("SPI")?)?;
    let flag = st.next("-A or -E")?;
    let alg_tok = st.next("algorithm")?;
    let algorithm = match (flag.text, protocol) {
        ("-A", IpsecProtocol::Ah) => AuthAlgorithm::from_setkey_name(alg_tok.text).map(Algorithm::Auth),
        ("-E", IpsecProtocol::Esp) => CipherAlgorithm::from_setkey_name(alg_tok.text).map(Algorithm::Cipher),
        ("-A", _) => return Err(Statement::err_at(&flag, SetkeyErrorKind::FlagMismatch { protocol, flag: "-A" })),
        ("-E", _) => return Err(Statement::err_at(&flag, SetkeyErrorKind::FlagMismatch { protocol, flag: "-E" })),
        (other, _) => {
            return Err(Statement::err_at(
                &flag,
                SetkeyErrorKind::Expected {
                    expected: "-A or -E",
                    found: other.to_string(),
                },
            ))
        }
    }
    .ok_or_else(|| Statement::err_at(&alg_tok, SetkeyErrorKind::UnknownAlgorithm(alg_tok.text.to_string())))?;
    let key_tok = st.next("key")?;
    let key = parse_key(&key_tok)?;
    st.finish()?;
    let sa = SecurityAssociation::new(src, dst, protocol, spi, algorithm, key).map_err(|e| match e {
        IpsecError::Crypto(c) => Statement::err_at(&key_tok, SetkeyErrorKind::KeyLength(c)),
        other => unreachable!("protocol/algorithm pairing checked above: {other}"),
    })?;
    dbs.add_sa(sa).map_err(|_| {
        Statement::err_at(
            &st.tokens[0],
            SetkeyErrorKind::DuplicateSa { dst, spi, protocol },
        )
    })
}

fn parse_spdadd(st: &mut Statement<'_>, dbs: &mut SecurityDatabases) -> Result<(), SetkeyError> {
    let selector_src = st.address()?;
    let selector_dst = st.address()?;
    st.expect("any")?;
    st.expect("-P")?;
    let dir_tok = st.next("in or out")?;
    let direction = match dir_tok.text {
        "in" => PolicyDirection::In,
        "out" => PolicyDirection::Out,
        other => {
            return Err(Statement::err_at(
                &dir_tok,
                SetkeyErrorKind::Expected {
                    expected: "in or out",
                    found: other.to_string(),
                },
            ))
        }
    };
    st.expect("ipsec")?;
    let mut transforms = Vec::new();
    while let Some(tok) = st.peek().cloned() {
        st.pos += 1;
        let protocol = match tok.text.split('/').collect::<Vec<_>>().as_slice() {
            ["esp", "transport", "", "require"] => IpsecProtocol::Esp,
            ["ah", "transport", "", "require"] => IpsecProtocol::Ah,
            _ => return Err(Statement::err_at(&tok, SetkeyErrorKind::BadTransform(tok.text.to_string()))),
        };
        transforms.push(protocol);
    }
    if transforms.is_empty() {
        return Err(Statement::err_at(&st.end, SetkeyErrorKind::EmptyPolicy));
    }
    dbs.add_policy(SecurityPolicy {
        selector_src,
        selector_dst,
        direction,
        transforms,
    });
    Ok(())
}

/// Parses a setkey file, applying statements in order.
pub fn parse_setkey(text: &str) -> Result<SecurityDatabases, SetkeyError> {
    let mut dbs = SecurityDatabases::new();
    let mut tokens = tokenize(text).into_iter().peekable();
    while tokens.peek().is_some() {
        let mut body = Vec::new();
        let end = loop {
            match tokens.next() {
                Some(t) if t.text == ";" => break t,
                Some(t) => body.push(t),
                None => {
                    let last = body.last().expect("loop entered with a token");
                    return Err(Statement::err_at(last, SetkeyErrorKind::Unterminated));
                }
            }
        };
        if body.is_empty() {
            continue;
        }
        let mut st = Statement { tokens: body, end, pos: 0 };
        let keyword = st.next("keyword")?;
        match keyword.text {
            "flush" => {
                st.finish()?;
                dbs.flush();
            }
            "spdflush" => {
                st.finish()?;
                dbs.spdflush();
            }
            "add" => parse_add(&mut st, &mut dbs)?,
            "spdadd" => parse_spdadd(&mut st, &mut dbs)?,
            other => {
                return Err(Statement::err_at(
                    &keyword,
                    SetkeyErrorKind::UnknownKeyword(other.to_string()),
                ))
            }
        }
    }
    Ok(dbs)
}

/// Renders databases as a setkey file that `parse_setkey` maps back to the
/// same SAD and SPD.
pub fn render_setkey(dbs: &SecurityDatabases) -> String {
    let mut out = String::from("#!/usr/sbin/setkey -f\n\nflush;\nspdflush;\n");
    if !dbs.sad.is_empty() {
        out.push('\n');
    }
    for sa in &dbs.sad {
        let (flag, alg) = match sa.algorithm {
            Algorithm::Auth(a) => ("-A", a.setkey_name()),
            Algorithm::Cipher(c) => ("-E", c.setkey_name()),
        };
        let _ = writeln!(
            out,
            "add {} {} {} 0x{:x} {} {}\n0x{};",
            sa.src,
            sa.dst,
            sa.protocol,
            sa.spi,
            flag,
            alg,
            hex::encode(&sa.key)
        );
    }
    for p in &dbs.spd {
        let _ = write!(
            out,
            "\nspdadd {} {} any -P {} ipsec",
            p.selector_src,
            p.selector_dst,
            p.direction.name()
        );
        for t in &p.transforms {
            let _ = write!(out, "\n{t}/transport//require");
        }
        out.push_str(";\n");
    }
    out
}

impl fmt::Display for SecurityDatabases {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_setkey(self))
    }
}
