use artvista_core::{
    build_template, build_template_detailed, render_filled_png, render_template_svg, synthetic_photo,
    template_from_json, template_to_json, Fills, PbnTemplate, TemplateBuild, TemplateOptions,
};

fn seeded_build(seed: u64) -> TemplateBuild {
    let img = synthetic_photo(72, 56, seed);
    let opts = TemplateOptions {
        colors: 8,
        seed,
        min_area_fraction: 0.002,
        ..Default::default()
    };
    build_template_detailed(&img, &opts).unwrap()
}

#[test]
fn json_round_trip_is_identity() {
    for seed in 0..50 {
        let t = seeded_build(seed).template;
        let bytes = template_to_json(&t);
        let back = template_from_json(&bytes).unwrap();
        assert_eq!(back, t, "seed {seed}");
        assert_eq!(template_to_json(&back), bytes, "seed {seed}");
    }
}

#[test]
fn simplified_templates_round_trip_too() {
    for seed in 0..10 {
        let img = synthetic_photo(72, 56, seed);
        let opts = TemplateOptions {
            simplify_tolerance: 1.0,
            seed,
            ..Default::default()
        };
        let t = build_template(&img, &opts).unwrap();
        assert_eq!(template_from_json(&template_to_json(&t)).unwrap(), t);
    }
}

fn svg_facts(t: &PbnTemplate) -> (usize, Vec<(u32, String)>, usize, String) {
    let bytes = render_template_svg(t, 1.0).unwrap();
    let text = String::from_utf8(bytes).unwrap();
    let doc = roxmltree::Document::parse(&text).expect("well-formed SVG");
    let paths = doc.descendants().filter(|n| n.has_tag_name("path")).count();
    let labels = doc
        .descendants()
        .filter(|n| n.has_tag_name("text") && n.attribute("class") == Some("label"))
        .map(|n| {
            (
                n.attribute("data-region").unwrap().parse().unwrap(),
                n.text().unwrap_or_default().to_string(),
            )
        })
        .collect();
    let swatches = doc
        .descendants()
        .filter(|n| n.has_tag_name("rect") && n.attribute("class") == Some("swatch"))
        .count();
    let canvas = doc
        .descendants()
        .find(|n| n.attribute("id") == Some("canvas"))
        .and_then(|n| n.attribute("viewBox"))
        .unwrap()
        .to_string();
    (paths, labels, swatches, canvas)
}

#[test]
fn svg_has_one_path_per_region_and_one_label_per_anchor() {
    for seed in 0..20 {
        let t = seeded_build(seed).template;
        let (paths, labels, swatches, view_box) = svg_facts(&t);
        assert_eq!(paths, t.regions.len());
        assert_eq!(swatches, t.palette.len());
        assert_eq!(view_box, format!("0 0 {} {}", t.width, t.height));
        let labelled: Vec<_> = t.regions.iter().filter(|r| !r.label_omitted).collect();
        assert_eq!(labels.len(), labelled.len());
        for r in labelled {
            let hits: Vec<_> = labels.iter().filter(|(id, _)| *id == r.id).collect();
            assert_eq!(hits.len(), 1);
            assert_eq!(hits[0].1, r.number.to_string());
        }
    }
}

#[test]
fn correct_fills_reproduce_the_quantized_image_off_the_borders() {
    for seed in 0..20 {
        let b = seeded_build(seed);
        let t = &b.template;
        let fills: Fills = t.regions.iter().map(|r| (r.id, r.number)).collect();
        let filled = render_filled_png(t, &fills).unwrap();
        let reference = b.regions.index_map().render(&t.palette);
        let (w, h) = (t.width, t.height);
        let mut compared = 0;
        for y in 0..h {
            for x in 0..w {
                let r = b.regions.get(x, y);
                let border = (x + 1 < w && b.regions.get(x + 1, y) != r) || (y + 1 < h && b.regions.get(x, y + 1) != r);
                if border {
                    continue;
                }
                assert_eq!(filled.get(x, y), reference.get(x, y), "seed {seed} ({x},{y})");
                compared += 1;
            }
        }
        assert!(compared > (w * h / 2) as usize);
    }
}

#[test]
fn same_seed_same_bytes() {
    let img = synthetic_photo(90, 70, 4);
    let opts = TemplateOptions {
        seed: 42,
        ..Default::default()
    };
    let a = build_template(&img, &opts).unwrap();
    let b = build_template(&img, &opts).unwrap();
    assert_eq!(template_to_json(&a), template_to_json(&b));
    assert_eq!(render_template_svg(&a, 1.0).unwrap(), render_template_svg(&b, 1.0).unwrap());
}
