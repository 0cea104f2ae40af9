use std::path::Path;

use super::encode::{CategoryMode, ColumnRule, EncodingSpec, LabelMap};
use super::{parse_fields, read_rows, ColumnKind, IngestError, RawDataset, RawRecord, Source};

/// The 41 connection features of an NSL-KDD record, in file order.
pub const NSL_KDD_FEATURES: [&str; 41] = [
    "duration",
    "protocol_type",
    "service",
    "flag",
    "src_bytes",
    "dst_bytes",
    "land",
    "wrong_fragment",
    "urgent",
    "hot",
    "num_failed_logins",
    "logged_in",
    "num_compromised",
    "root_shell",
    "su_attempted",
    "num_root",
    "num_file_creations",
    "num_shells",
    "num_access_files",
    "num_outbound_cmds",
    "is_host_login",
    "is_guest_login",
    "count",
    "srv_count",
    "serror_rate",
    "srv_serror_rate",
    "rerror_rate",
    "srv_rerror_rate",
    "same_srv_rate",
    "diff_srv_rate",
    "srv_diff_host_rate",
    "dst_host_count",
    "dst_host_srv_count",
    "dst_host_same_srv_rate",
    "dst_host_diff_srv_rate",
    "dst_host_same_src_port_rate",
    "dst_host_srv_diff_host_rate",
    "dst_host_serror_rate",
    "dst_host_srv_serror_rate",
    "dst_host_rerror_rate",
    "dst_host_srv_rerror_rate",
];

const PROTOCOLS: [&str; 3] = ["tcp", "udp", "icmp"];

const SERVICES: [&str; 70] = [
    "aol",
    "auth",
    "bgp",
    "courier",
    "csnet_ns",
    "ctf",
    "daytime",
    "discard",
    "domain",
    "domain_u",
    "echo",
    "eco_i",
    "ecr_i",
    "efs",
    "exec",
    "finger",
    "ftp",
    "ftp_data",
    "gopher",
    "harvest",
    "hostnames",
    "http",
    "http_2784",
    "http_443",
    "http_8001",
    "imap4",
    "IRC",
    "iso_tsap",
    "klogin",
    "kshell",
    "ldap",
    "link",
    "login",
    "mtp",
    "name",
    "netbios_dgm",
    "netbios_ns",
    "netbios_ssn",
    "netstat",
    "nnsp",
    "nntp",
    "ntp_u",
    "other",
    "pm_dump",
    "pop_2",
    "pop_3",
    "printer",
    "private",
    "red_i",
    "remote_job",
    "rje",
    "shell",
    "smtp",
    "sql_net",
    "ssh",
    "sunrpc",
    "supdup",
    "systat",
    "telnet",
    "tftp_u",
    "tim_i",
    "time",
    "urh_i",
    "urp_i",
    "uucp",
    "uucp_path",
    "vmnet",
    "whois",
    "X11",
    "Z39_50",
];

const FLAGS: [&str; 11] = [
    "OTH", "REJ", "RSTO", "RSTOS0", "RSTR", "S0", "S1", "S2", "S3", "SF", "SH",
];

fn columns() -> Vec<(String, ColumnKind)> {
    NSL_KDD_FEATURES
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let kind = if (1..=3).contains(&i) {
                ColumnKind::Categorical
            } else {
                ColumnKind::Numeric
            };
            (name.to_string(), kind)
        })
        .collect()
}

/// Loads an NSL-KDD file (`KDDTrain+.txt` layout): 41 features, the label,
/// and optionally the trailing difficulty level, which is dropped.
pub fn load_nsl_kdd(path: &Path) -> Result<RawDataset, IngestError> {
    let columns = columns();
    let rows = read_rows(path)?;
    if rows.is_empty() {
        return Err(IngestError::EmptyDataset);
    }
    let mut records = Vec::with_capacity(rows.len());
    for (line, fields) in rows {
        if fields.len() != 42 && fields.len() != 43 {
            return Err(IngestError::MalformedRow {
                line,
                reason: format!("expected 42 or 43 fields, found {}", fields.len()),
            });
        }
        let values = parse_fields(line, &fields[..41], &columns)?;
        records.push(RawRecord {
            values,
            label_text: fields[41].clone(),
        });
    }
    Ok(RawDataset {
        columns,
        records,
        source: Source::NslKdd,
    })
}

/// One-hot for protocol, service and flag with the published category
/// lists; every label other than `normal` is an anomaly.
pub fn nsl_kdd_encoding() -> EncodingSpec {
    let one_hot = |cats: &[&str]| ColumnRule::OneHot(cats.iter().map(|c| c.to_string()).collect());
    let rules = (0..NSL_KDD_FEATURES.len())
        .map(|i| match i {
            1 => one_hot(&PROTOCOLS),
            2 => one_hot(&SERVICES),
            3 => one_hot(&FLAGS),
            _ => ColumnRule::Passthrough,
        })
        .collect();
    EncodingSpec {
        rules,
        labels: LabelMap::normal_only(["normal"]),
        mode: CategoryMode::Strict,
    }
}
