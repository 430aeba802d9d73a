//! Prompt templates for the judge-model feature provider.
//!
//! One call covers all responses of an instance: pairwise and listwise
//! prompts present the responses jointly. Rendering is deterministic
//! string substitution; the template id is part of the cache key.

use super::LlmError;
use crate::data::{JudgmentInstance, JudgmentType, ScaleSpec};

pub const POINTWISE_TEMPLATE: &str = "pointwise";
pub const PAIRWISE_TEMPLATE: &str = "pairwise";
pub const LISTWISE_TEMPLATE: &str = "listwise";

/// Default template id for a judgment type.
pub fn template_for(ty: JudgmentType) -> &'static str {
    match ty {
        JudgmentType::Pointwise => POINTWISE_TEMPLATE,
        JudgmentType::Pairwise => PAIRWISE_TEMPLATE,
        JudgmentType::Listwise => LISTWISE_TEMPLATE,
    }
}

fn response(instance: &JudgmentInstance, idx: usize) -> Result<&str, LlmError> {
    instance
        .candidate
        .responses
        .get(idx)
        .map(String::as_str)
        .ok_or_else(|| LlmError::MissingPlaceholder(format!("RESPONSE_{}", idx + 1)))
}

fn prompt_text(instance: &JudgmentInstance) -> &str {
    instance.candidate.prompt.as_deref().unwrap_or("")
}

fn render_pointwise(instance: &JudgmentInstance, scale: &ScaleSpec) -> Result<String, LlmError> {
    let dims: Vec<String> = scale
        .dimensions
        .iter()
        .map(|d| format!("{} ({}-{})", d.name, d.min, d.max))
        .collect();
    let overall = &scale.dimensions[0];
    let mut schema_lines = String::new();
    for d in &scale.dimensions {
        schema_lines.push_str(&format!("  \"{}\": <{}-{}>,\n", d.name, d.min, d.max));
    }
    Ok(format!(
        "Given a prompt and a response, follow the rubric to make a judgment.\n\n\
         ## Rubric:\n\
         First rate the presentation of the response on three aspects: style, format, \
         and wording. Assign each aspect a scalar score in [0, 4].\n\
         Then judge the response on the task aspects: {dims}. Use the score range given \
         for each aspect.\n\
         Finally assign an overall score in [{omin}, {omax}].\n\n\
         ## Prompt: {prompt}\n\n\
         ## Response: {response}\n\n\
         Please output a valid JSON object using the following schema:\n\
         {{\n\
         \x20 \"Rationale\": <explanation for the given scores>,\n\
         \x20 \"Style\": <0-4>,\n\
         \x20 \"Format\": <0-4>,\n\
         \x20 \"Wording\": <0-4>,\n\
         {schema_lines}\
         \x20 \"Overall\": <{omin}-{omax}>\n\
         }}\n\n\
         Format the abovementioned schema and produce the judgment JSON now.",
        dims = dims.join(", "),
        omin = overall.min,
        omax = overall.max,
        prompt = prompt_text(instance),
        response = response(instance, 0)?,
        schema_lines = schema_lines,
    ))
}

fn render_pairwise(instance: &JudgmentInstance, scale: &ScaleSpec) -> Result<String, LlmError> {
    let x = scale.pair_levels_x.unwrap_or(1) as i64;
    let levels: Vec<String> = (-x..=x).map(|v| v.to_string()).collect();
    Ok(format!(
        "Given a prompt and two responses, follow the rubric to make a comparative \
         judgment.\n\n\
         ## Rubric:\n\
         First rate the presentation quality across both responses on three aspects: \
         style, format, and wording. Assign each aspect a scalar score in [0, 4].\n\
         Then assign a single comparative score in {{{levels}}} using the scale: \
         -{x}: Response 1 much better than Response 2; 0: about the same; \
         {x}: Response 2 much better than Response 1.\n\n\
         ## Prompt: {prompt}\n\n\
         ## Response 1: {r1}\n\n\
         ## Response 2: {r2}\n\n\
         Please output a valid JSON object using the following schema:\n\
         {{\n\
         \x20 \"Rationale\": <explanation for the comparative score>,\n\
         \x20 \"Style\": <0-4>,\n\
         \x20 \"Format\": <0-4>,\n\
         \x20 \"Wording\": <0-4>,\n\
         \x20 \"Score\": <-{x}..{x}>\n\
         }}\n\n\
         Format the abovementioned schema and produce the judgment JSON now.",
        levels = levels.join(","),
        x = x,
        prompt = prompt_text(instance),
        r1 = response(instance, 0)?,
        r2 = response(instance, 1)?,
    ))
}

fn render_listwise(instance: &JudgmentInstance, scale: &ScaleSpec) -> Result<String, LlmError> {
    let k = scale.listwise_items.unwrap_or(0) as usize;
    let dim = &scale.dimensions[0];
    let mut responses = String::new();
    for i in 0..k {
        responses.push_str(&format!(
            "## Response {}: {}\n\n",
            i + 1,
            response(instance, i)?
        ));
    }
    let mut schema_lines = String::new();
    for i in 0..k {
        schema_lines.push_str(&format!(
            "  \"Response{} Score\": <{}-{}>,\n",
            i + 1,
            dim.min,
            dim.max
        ));
    }
    let example: Vec<String> = (0..k).map(|i| i.to_string()).collect();
    Ok(format!(
        "Given a prompt and {k} responses, follow the rubric to assess {dim_name} and \
         rank the responses.\n\n\
         ## Rubric:\n\
         First rate the presentation quality across the responses on three aspects: \
         style, format, and wording. Assign each aspect a scalar score in [0, 4].\n\
         Then assign each response a {dim_name} score in [{dmin}, {dmax}].\n\n\
         ## Prompt: {prompt}\n\n\
         {responses}\
         Please output a valid JSON object using the following schema:\n\
         {{\n\
         \x20 \"Rationale\": <explanation for your judgment and ranking>,\n\
         \x20 \"Style\": <0-4>,\n\
         \x20 \"Format\": <0-4>,\n\
         \x20 \"Wording\": <0-4>,\n\
         {schema_lines}\
         \x20 \"Ranking\": <list of indices indicating best to worst, e.g., [{example}]>\n\
         }}\n\n\
         Format the abovementioned schema and produce the judgment JSON now.",
        k = k,
        dim_name = dim.name,
        dmin = dim.min,
        dmax = dim.max,
        prompt = prompt_text(instance),
        responses = responses,
        schema_lines = schema_lines,
        example = example.join(","),
    ))
}

/// Render the prompt for an instance. The template must match the
/// instance's judgment type.
pub fn render_prompt(
    template_id: &str,
    instance: &JudgmentInstance,
    scale: &ScaleSpec,
) -> Result<String, LlmError> {
    match (template_id, instance.judgment_type()) {
        (POINTWISE_TEMPLATE, JudgmentType::Pointwise) => render_pointwise(instance, scale),
        (PAIRWISE_TEMPLATE, JudgmentType::Pairwise) => render_pairwise(instance, scale),
        (LISTWISE_TEMPLATE, JudgmentType::Listwise) => render_listwise(instance, scale),
        (id, ty) => Err(LlmError::UnknownTemplate {
            template_id: id.to_string(),
            judgment_type: ty,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Candidate, DimScale, JudgmentScore};
    use std::collections::BTreeMap;

    fn helpsteer2_scale() -> ScaleSpec {
        ScaleSpec::pointwise(
            ["Helpfulness", "Correctness", "Coherence", "Complexity", "Verbosity"]
                .iter()
                .map(|n| DimScale {
                    name: (*n).into(),
                    min: 0,
                    max: 4,
                    step: 1,
                })
                .collect(),
        )
    }

    fn instance(responses: Vec<&str>, score: JudgmentScore) -> JudgmentInstance {
        JudgmentInstance {
            candidate: Candidate {
                id: "c".into(),
                prompt: Some("Explain the tides.".into()),
                responses: responses.into_iter().map(String::from).collect(),
                meta: BTreeMap::new(),
            },
            score,
        }
    }

    #[test]
    fn pointwise_prompt_names_all_dimensions() {
        let mut dims = BTreeMap::new();
        for n in ["Helpfulness", "Correctness", "Coherence", "Complexity", "Verbosity"] {
            dims.insert(n.to_string(), 2.0);
        }
        let inst = instance(vec!["The moon pulls the sea."], JudgmentScore::Pointwise { dims });
        let prompt = render_prompt(POINTWISE_TEMPLATE, &inst, &helpsteer2_scale()).unwrap();
        for n in ["Helpfulness", "Correctness", "Coherence", "Complexity", "Verbosity"] {
            assert!(prompt.contains(&format!("\"{n}\"")), "missing {n} slot");
        }
        assert!(prompt.contains("Explain the tides."));
        assert!(prompt.contains("The moon pulls the sea."));
    }

    #[test]
    fn pairwise_prompt_covers_signed_scale() {
        let inst = instance(vec!["Answer A.", "Answer B."], JudgmentScore::Pairwise { pair: -2 });
        let prompt = render_prompt(PAIRWISE_TEMPLATE, &inst, &ScaleSpec::pairwise(3)).unwrap();
        assert!(prompt.contains("{-3,-2,-1,0,1,2,3}"));
        assert!(prompt.contains("Response 1"));
        assert!(prompt.contains("Response 2"));
    }

    #[test]
    fn listwise_prompt_has_all_slots_and_ranking() {
        let inst = instance(
            vec!["First.", "Second.", "Third."],
            JudgmentScore::Listwise {
                items: vec![4.0, 2.0, 1.0],
                ranking: vec![0, 1, 2],
            },
        );
        let scale = ScaleSpec::listwise(
            DimScale {
                name: "Relevance".into(),
                min: 1,
                max: 4,
                step: 1,
            },
            3,
        );
        let prompt = render_prompt(LISTWISE_TEMPLATE, &inst, &scale).unwrap();
        assert!(prompt.contains("## Response 3: Third."));
        assert!(prompt.contains("\"Ranking\""));
        assert!(prompt.contains("\"Response3 Score\""));
    }

    #[test]
    fn rendering_is_deterministic() {
        let inst = instance(vec!["A.", "B."], JudgmentScore::Pairwise { pair: 0 });
        let scale = ScaleSpec::pairwise(3);
        assert_eq!(
            render_prompt(PAIRWISE_TEMPLATE, &inst, &scale).unwrap(),
            render_prompt(PAIRWISE_TEMPLATE, &inst, &scale).unwrap()
        );
    }

    #[test]
    fn wrong_template_is_rejected() {
        let inst = instance(vec!["A.", "B."], JudgmentScore::Pairwise { pair: 0 });
        assert!(matches!(
            render_prompt("pointwise", &inst, &ScaleSpec::pairwise(3)),
            Err(LlmError::UnknownTemplate { .. })
        ));
        assert!(matches!(
            render_prompt("nonsense", &inst, &ScaleSpec::pairwise(3)),
            Err(LlmError::UnknownTemplate { .. })
        ));
    }

    #[test]
    fn missing_response_is_an_error() {
        let inst = instance(vec!["only one"], JudgmentScore::Pairwise { pair: 0 });
        assert!(matches!(
            render_prompt(PAIRWISE_TEMPLATE, &inst, &ScaleSpec::pairwise(3)),
            Err(LlmError::MissingPlaceholder(_))
        ));
    }
}
