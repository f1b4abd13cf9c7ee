//! CSV output: fixed header, `.` decimals, 12 significant digits, `\n` rows.


/// Formats like C's `%.12g`.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let fixed = format!("{:.*}", (11 - exp) as usize, x);
        trim_zeros(&fixed).into()
    } else {
        format!("{}e{}", trim_zeros(mantissa), exp)
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Empty field for `None`.
pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Builds a CSV document row by row.
#[derive(Debug, Clone)]
pub struct Table {
    columns: usize,
    text: String,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Table { columns: header.len(), text }
    }

    pub fn row<S: AsRef<str>>(&mut self, fields: &[S]) -> &mut Self {
        assert_eq!(fields.len(), self.columns, "row width does not match header");
        for (i, f) in fields.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            self.text.push_str(f.as_ref());
        }
        self.text.push('\n');
        self
    }

    pub fn numbers(&mut self, values: &[f64]) -> &mut Self {
        let fields: Vec<String> = values.iter().map(|v| num(*v)).collect();
        self.row(&fields)
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

impl std::fmt::Display for Table {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.text)
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(num(3.174568123456789), "3.17456812346");
        assert_eq!(num(6.8526), "6.8526");
        assert_eq!(num(1.0), "1");
        assert_eq!(num(-0.5), "-0.5");
        assert_eq!(num(1234567.0), "1234567");
        assert_eq!(num(1e-7), "1e-7");
        assert_eq!(num(-2.5e-12), "-2.5e-12");
        assert_eq!(num(1.23456789012345e15), "1.23456789012e15");
        assert_eq!(num(0.00012345), "0.00012345");
        assert_eq!(num(f64::NAN), "NaN");
        assert_eq!(num(9.9999999999999e11), "1e12");
    }

    #[test]
    fn rows_are_newline_terminated() {
        let mut t = Table::new(&["x", "y"]);
        t.numbers(&[1.0, 2.5]).row(&["a", ""]);
        assert_eq!(t.as_str(), "x,y\n1,2.5\na,\n");
    }

    #[test]
    #[should_panic]
    fn width_mismatch_panics() {
        Table::new(&["x"]).numbers(&[1.0, 2.0]);
    }
}
