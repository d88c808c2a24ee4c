//! Printer producing the concrete syntax accepted by [`super::parse_process`].

use super::{InputPrefix, Process};

pub fn print_process(p: &Process) -> String {
    let mut out = String::new();
    write_par(&mut out, p);
    out
}

fn write_par(out: &mut String, p: &Process) {
    match p {
        Process::Par(a, b) => {
            write_prefix(out, a);
            out.push_str(" | ");
            write_par(out, b);
        }
        _ => write_prefix(out, p),
    }
}

fn write_prefix(out: &mut String, p: &Process) {
    match p {
        Process::Nil => out.push('0'),
        Process::Par(..) => {
            out.push('(');
            write_par(out, p);
            out.push(')');
        }
        Process::Output(o) => {
            out.push_str(&o.chan);
            out.push_str("!(");
            for (i, e) in o.ints.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(&e.to_string());
            }
            if !o.chans.is_empty() {
                out.push_str(if o.ints.is_empty() { ";" } else { "; " });
                out.push_str(&o.chans.join(", "));
            }
            out.push(')');
            write_cont(out, &o.cont);
        }
        Process::Input(i) => write_input(out, i, false),
        Process::RepInput(i) => write_input(out, i, true),
        Process::Nu { name, annot, body, .. } => {
            out.push_str("new ");
            out.push_str(name);
            if let Some(t) = annot {
                out.push_str(" : ");
                out.push_str(&t.to_string());
            }
            out.push_str(" in ");
            write_prefix(out, body);
        }
        Process::If { cond, then, els, .. } => {
            out.push_str("if ");
            out.push_str(&cond.to_string());
            out.push_str(" then ");
            write_prefix(out, then);
            out.push_str(" else ");
            write_prefix(out, els);
        }
        Process::LetNd { names, body, .. } => {
            out.push_str("let* ");
            out.push_str(&names.join(", "));
            out.push_str(" in ");
            write_prefix(out, body);
        }
    }
}

fn write_input(out: &mut String, i: &InputPrefix, rep: bool) {
    if rep {
        out.push('*');
    }
    out.push_str(&i.chan);
    out.push_str("?(");
    out.push_str(&i.ints.join(", "));
    if !i.chans.is_empty() {
        out.push_str(if i.ints.is_empty() { ";" } else { "; " });
        out.push_str(&i.chans.join(", "));
    }
    out.push(')');
    write_cont(out, &i.cont);
}

fn write_cont(out: &mut String, cont: &Process) {
    if !matches!(cont, Process::Nil) {
        out.push('.');
        write_prefix(out, cont);
    }
}
