// SPDX-License-Identifier: Apache-2.0

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{check_version, from_json, read_text, to_json, write_atomic, FORMAT_VERSION};
use crate::error::Result;
use crate::token::{Anchor, QuantizationSpec, TokenBlock, TokenSequence};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TokenFile {
    version: u32,
    quantization: QuantizationSpec,
    anchor: Anchor,
    blocks: Vec<TokenBlock>,
}

pub fn parse_tokens(text: &str, source: &str) -> Result<TokenSequence> {
    let file: TokenFile = from_json(text, source)?;
    check_version(file.version)?;
    TokenSequence::new(file.quantization, file.anchor, file.blocks)
}

pub fn tokens_to_json(tokens: &TokenSequence) -> Result<String> {
    tokens.validate()?;
    Ok(to_json(&TokenFile {
        version: FORMAT_VERSION,
        quantization: tokens.spec,
        anchor: tokens.anchor,
        blocks: tokens.blocks.clone(),
    }))
}

pub fn load_tokens(path: &Path) -> Result<TokenSequence> {
    parse_tokens(&read_text(path)?, &path.display().to_string())
}

pub fn save_tokens(tokens: &TokenSequence, path: &Path) -> Result<()> {
    write_atomic(path, tokens_to_json(tokens)?.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::geometry::CameraModel;
    use crate::token::{DepthMode, DepthSource};

    fn seq() -> TokenSequence {
        let cam = CameraModel::from_focal(500.0, 500.0, 320.0, 240.0, 640, 480).unwrap();
        let mut spec = QuantizationSpec::for_camera(&cam);
        spec.depth_mode = DepthMode::AnchorRelative { max_offset: 0.25 };
        TokenSequence::new(
            spec,
            Anchor::new(100.5, 7.25, 0.6180339887498949, DepthSource::PriorScale),
            vec![
                TokenBlock {
                    d_token: 128,
                    u_token: 1,
                    v_token: 2,
                    g_token: 0,
                    r_tokens: [3, 4, 5],
                },
                TokenBlock {
                    d_token: 0,
                    u_token: 639,
                    v_token: 479,
                    g_token: 1,
                    r_tokens: [255, 0, 9],
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let s = seq();
        let text = tokens_to_json(&s).unwrap();
        assert!(text.contains("\"kind\": \"anchor_relative\""));
        assert!(text.contains("\"source\": \"prior_scale\""));
        let back = parse_tokens(&text, "mem").unwrap();
        assert_eq!(back, s);
        assert_eq!(tokens_to_json(&back).unwrap(), text);
    }

    #[test]
    fn out_of_range_block_rejected() {
        let text = tokens_to_json(&seq())
            .unwrap()
            .replace("\"u\": 639", "\"u\": 640");
        assert!(matches!(
            parse_tokens(&text, "mem"),
            Err(Error::Validation(_))
        ));
    }
}
