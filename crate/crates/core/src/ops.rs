//! Fixed operator table shared by the reader and the printer.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpKind {
    Xfx,
    Xfy,
    Yfx,
    Fy,
    Fx,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OpDef {
    pub priority: u16,
    pub kind: OpKind,
}

impl OpDef {
    /// Maximum priorities of the left and right operands.
    pub fn arg_priorities(self) -> (u16, u16) {
        let p = self.priority;
        match self.kind {
            OpKind::Xfx => (p - 1, p - 1),
            OpKind::Xfy => (p - 1, p),
            OpKind::Yfx => (p, p - 1),
            OpKind::Fy => (0, p),
            OpKind::Fx => (0, p - 1),
        }
    }
}

const INFIX: &[(&str, u16, OpKind)] = &[
    (":-", 1200, OpKind::Xfx),
    ("-->", 1200, OpKind::Xfx),
    (";", 1100, OpKind::Xfy),
    ("|", 1100, OpKind::Xfy),
    ("->", 1050, OpKind::Xfy),
    (",", 1000, OpKind::Xfy),
    ("#>", 800, OpKind::Xfy),
    ("=", 700, OpKind::Xfx),
    ("\\=", 700, OpKind::Xfx),
    ("==", 700, OpKind::Xfx),
    ("\\==", 700, OpKind::Xfx),
    ("@<", 700, OpKind::Xfx),
    ("@>", 700, OpKind::Xfx),
    ("@=<", 700, OpKind::Xfx),
    ("@>=", 700, OpKind::Xfx),
    ("=..", 700, OpKind::Xfx),
    ("is", 700, OpKind::Xfx),
    ("=:=", 700, OpKind::Xfx),
    ("=\\=", 700, OpKind::Xfx),
    ("<", 700, OpKind::Xfx),
    (">", 700, OpKind::Xfx),
    ("=<", 700, OpKind::Xfx),
    (">=", 700, OpKind::Xfx),
    ("+", 500, OpKind::Yfx),
    ("-", 500, OpKind::Yfx),
    ("*", 400, OpKind::Yfx),
    ("/", 400, OpKind::Yfx),
    ("//", 400, OpKind::Yfx),
    ("mod", 400, OpKind::Yfx),
    ("<>", 200, OpKind::Xfx),
    ("**", 200, OpKind::Xfx),
    ("^", 200, OpKind::Xfy),
    (":", 200, OpKind::Xfy),
];

const PREFIX: &[(&str, u16, OpKind)] = &[
    (":-", 1200, OpKind::Fx),
    ("?-", 1200, OpKind::Fx),
    ("\\+", 900, OpKind::Fy),
    ("@", 200, OpKind::Fy),
    ("-", 200, OpKind::Fy),
    ("+", 200, OpKind::Fy),
];

fn find(table: &[(&str, u16, OpKind)], name: &str) -> Option<OpDef> {
    table.iter().find(|(n, _, _)| *n == name).map(|&(_, priority, kind)| OpDef { priority, kind })
}

pub fn infix(name: &str) -> Option<OpDef> {
    find(INFIX, name)
}

pub fn prefix(name: &str) -> Option<OpDef> {
    find(PREFIX, name)
}

pub fn is_op(name: &str) -> bool {
    infix(name).is_some() || prefix(name).is_some()
}
