//! Byte-stable artifact formatting: comma-separated values with `.`
//! decimals, LF endings, UTF-8, one header row; floats printed with 17
//! significant digits so identical runs produce identical bytes.

/// Fixed-width scientific formatting, 17 significant digits.
pub(crate) fn fmt_float(x: f64) -> String {
    format!("{:.16e}", x)
}

/// Optional float cell; `None` renders as an empty cell.
pub(crate) fn fmt_opt_float(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

/// Joins cells into one CSV line (no quoting; cells never contain commas).
pub(crate) fn csv_line<I, S>(cells: I) -> String
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut line = String::new();
    for (i, cell) in cells.into_iter().enumerate() {
        if i > 0 {
            line.push(',');
        }
        line.push_str(cell.as_ref());
    }
    line.push('\n');
    line
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_is_stable() {
        assert_eq!(fmt_float(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_float(-0.1), "-1.0000000000000001e-1");
        assert_eq!(fmt_opt_float(None), "");
    }

    #[test]
    fn csv_line_joins_with_lf() {
        assert_eq!(csv_line(["a", "b", ""]), "a,b,\n");
    }
}
