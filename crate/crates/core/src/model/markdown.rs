use std::fmt::Write;

use super::StructuredModel;

/// Renders sets and parameters as markdown lists, in declaration order.
/// Empty sections are omitted.
pub fn render_markdown(model: &StructuredModel) -> String {
    let mut out = String::new();
    if !model.sets.is_empty() {
        out.push_str("## Sets\n\n");
        for s in &model.sets {
            let unit = if s.size() == 1 { "element" } else { "elements" };
            let _ = writeln!(
                out,
                "- **{}**: {} ({} {unit})",
                s.name,
                describe(&s.description),
                s.size()
            );
        }
    }
    if !model.parameters.is_empty() {
        if !out.is_empty() {
            out.push('\n');
        }
        out.push_str("## Parameters\n\n");
        for p in &model.parameters {
            if p.domain.trim().is_empty() {
                let _ = writeln!(out, "- **{}**: {} = {}", p.name, describe(&p.description), p.data);
            } else {
                let _ = writeln!(
                    out,
                    "- **{}** over `{}`: {}",
                    p.name,
                    p.domain,
                    describe(&p.description)
                );
                let _ = writeln!(out, "  - data: {}", p.data);
            }
        }
    }
    out
}

fn describe(text: &str) -> &str {
    let t = text.trim();
    if t.is_empty() {
        "(no description)"
    } else {
        t
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::EXAMPLE;
    use super::super::{parse_model, ParamData, ParamDef};
    use super::*;

    #[test]
    fn golden_output() {
        let mut m = parse_model(EXAMPLE).unwrap();
        m.parameters.push(ParamDef {
            name: "B".into(),
            description: "budget".into(),
            domain: String::new(),
            data: ParamData::Scalar(10.0),
        });
        let want = "\
## Sets

- **I**: items (2 elements)

## Parameters

- **c** over `{i <in> I}`: profit
  - data: [3, 5]
- **B**: budget = 10
";
        assert_eq!(render_markdown(&m), want);
    }

    #[test]
    fn empty_parameter_section_is_omitted() {
        let mut m = parse_model(EXAMPLE).unwrap();
        m.parameters.clear();
        let text = render_markdown(&m);
        assert!(text.contains("- **I**: items (2 elements)"));
        assert!(!text.contains("Parameters"));
    }

    #[test]
    fn rendering_is_deterministic() {
        let m = parse_model(EXAMPLE).unwrap();
        assert_eq!(render_markdown(&m), render_markdown(&m));
    }
}
