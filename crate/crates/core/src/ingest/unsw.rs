use std::path::Path;

use super::encode::{infer_encoding, EncodingSpec, LabelMap};
use super::{
    parse_fields, parse_number, read_rows, ColumnKind, IngestError, RawDataset, RawRecord, Source,
};

/// Column layout of the UNSW-NB15 training/testing set CSVs.
pub const UNSW_NB15_COLUMNS: [&str; 45] = [
    "id",
    "dur",
    "proto",
    "service",
    "state",
    "spkts",
    "dpkts",
    "sbytes",
    "dbytes",
    "rate",
    "sttl",
    "dttl",
    "sload",
    "dload",
    "sloss",
    "dloss",
    "sinpkt",
    "dinpkt",
    "sjit",
    "djit",
    "swin",
    "stcpb",
    "dtcpb",
    "dwin",
    "tcprtt",
    "synack",
    "ackdat",
    "smean",
    "dmean",
    "trans_depth",
    "response_body_len",
    "ct_srv_src",
    "ct_state_ttl",
    "ct_dst_ltm",
    "ct_src_dport_ltm",
    "ct_dst_sport_ltm",
    "ct_dst_src_ltm",
    "is_ftp_login",
    "ct_ftp_cmd",
    "ct_flw_http_mthd",
    "ct_src_ltm",
    "ct_srv_dst",
    "is_sm_ips_ports",
    "attack_cat",
    "label",
];

// `id`, `attack_cat` and `label` are not features.
const FEATURES: std::ops::Range<usize> = 1..43;

fn columns() -> Vec<(String, ColumnKind)> {
    UNSW_NB15_COLUMNS[FEATURES]
        .iter()
        .map(|name| {
            let kind = match *name {
                "proto" | "service" | "state" => ColumnKind::Categorical,
                _ => ColumnKind::Numeric,
            };
            (name.to_string(), kind)
        })
        .collect()
}

/// Loads a UNSW-NB15 training/testing CSV. A header row is detected by a
/// non-numeric `dur` field in the first row. The binary `label` column
/// becomes `label_text` "normal" (0) or "attack" (1).
pub fn load_unsw_nb15(path: &Path) -> Result<RawDataset, IngestError> {
    let columns = columns();
    let mut rows = read_rows(path)?;
    if let Some((_, first)) = rows.first() {
        if first.len() > 1 && parse_number(&first[1]).is_none() {
            rows.remove(0);
        }
    }
    if rows.is_empty() {
        return Err(IngestError::EmptyDataset);
    }
    let mut records = Vec::with_capacity(rows.len());
    for (line, fields) in rows {
        if fields.len() != UNSW_NB15_COLUMNS.len() {
            return Err(IngestError::MalformedRow {
                line,
                reason: format!(
                    "expected {} fields, found {}",
                    UNSW_NB15_COLUMNS.len(),
                    fields.len()
                ),
            });
        }
        let values = parse_fields(line, &fields[FEATURES], &columns)?;
        let label_text = match fields[44].as_str() {
            "0" => "normal",
            "1" => "attack",
            other => {
                return Err(IngestError::MalformedRow {
                    line,
                    reason: format!("label must be 0 or 1, found {other:?}"),
                })
            }
        };
        records.push(RawRecord {
            values,
            label_text: label_text.to_string(),
        });
    }
    Ok(RawDataset {
        columns,
        records,
        source: Source::UnswNb15,
    })
}

/// Protocol, service and state vocabularies are open-ended in UNSW-NB15, so
/// their category lists are taken from the loaded records.
pub fn unsw_nb15_encoding(raw: &RawDataset) -> EncodingSpec {
    infer_encoding(raw, LabelMap::normal_only(["normal"]))
}
