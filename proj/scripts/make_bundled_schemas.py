"""Regenerates data/schemas/*.yaml. Column lists follow the official CSV headers."""
import yaml, pathlib

out = pathlib.Path(__file__).resolve().parent.parent / "data" / "schemas"
out.mkdir(parents=True, exist_ok=True)

# ---------------------------------------------------------------- NSL-KDD
intrinsic = ["duration", "protocol_type", "service", "flag", "src_bytes", "dst_bytes", "land",
             "wrong_fragment", "urgent"]
content = ["hot", "num_failed_logins", "logged_in", "num_compromised", "root_shell", "su_attempted",
           "num_root", "num_file_creations", "num_shells", "num_access_files", "num_outbound_cmds",
           "is_host_login", "is_guest_login"]
time_based = ["count", "srv_count", "serror_rate", "srv_serror_rate", "rerror_rate", "srv_rerror_rate",
              "same_srv_rate", "diff_srv_rate", "srv_diff_host_rate"]
host_based = ["dst_host_count", "dst_host_srv_count", "dst_host_same_srv_rate", "dst_host_diff_srv_rate",
              "dst_host_same_src_port_rate", "dst_host_srv_diff_host_rate", "dst_host_serror_rate",
              "dst_host_srv_serror_rate", "dst_host_rerror_rate", "dst_host_srv_rerror_rate"]
nsl_cols = intrinsic + content + time_based + host_based
assert len(nsl_cols) == 41
flags = {"land", "logged_in", "root_shell", "is_host_login", "is_guest_login"}
categorical = {"protocol_type", "service", "flag"}
nsl = {
    "name": "nsl-kdd",
    "label_column": "label",
    "classes": ["normal", "dos", "probe", "u2r_r2l"],
    "normal_class": "normal",
    "csv_header": False,
    "csv_columns": nsl_cols + ["label", "difficulty"],
    "unknown_labels": "error",
    "label_map": {
        "normal": "normal",
        **{a: "dos" for a in ["back", "land", "neptune", "pod", "smurf", "teardrop", "apache2", "mailbomb",
                              "processtable", "udpstorm"]},
        **{a: "probe" for a in ["ipsweep", "nmap", "portsweep", "satan", "mscan", "saint"]},
        **{a: "u2r_r2l" for a in ["ftp_write", "guess_passwd", "imap", "multihop", "phf", "spy", "warezclient",
                                  "warezmaster", "sendmail", "named", "snmpgetattack", "snmpguess", "xlock",
                                  "xsnoop", "worm", "buffer_overflow", "loadmodule", "perl", "rootkit",
                                  "httptunnel", "ps", "sqlattack", "xterm"]},
    },
    "columns": [{"name": c, "kind": "categorical" if c in categorical else "continuous"} for c in nsl_cols],
    "nonfunctional": {
        "dos": {"source": "reconstructed: host-based traffic columns are non-functional for Dos",
                "columns": host_based},
        "u2r_r2l": {"source": "reconstructed: time-based traffic columns are non-functional for U2R&R2L",
                    "columns": time_based},
        "probe": {"source": "reconstructed: content columns (binary flags excluded) are non-functional for Probe",
                  "columns": [c for c in content if c not in flags]},
    },
}

# ------------------------------------------------------------ CIC-IDS2017
cic_cols = """Destination Port, Flow Duration, Total Fwd Packets, Total Backward Packets,
Total Length of Fwd Packets, Total Length of Bwd Packets, Fwd Packet Length Max, Fwd Packet Length Min,
Fwd Packet Length Mean, Fwd Packet Length Std, Bwd Packet Length Max, Bwd Packet Length Min,
Bwd Packet Length Mean, Bwd Packet Length Std, Flow Bytes/s, Flow Packets/s, Flow IAT Mean, Flow IAT Std,
Flow IAT Max, Flow IAT Min, Fwd IAT Total, Fwd IAT Mean, Fwd IAT Std, Fwd IAT Max, Fwd IAT Min,
Bwd IAT Total, Bwd IAT Mean, Bwd IAT Std, Bwd IAT Max, Bwd IAT Min, Fwd PSH Flags, Bwd PSH Flags,
Fwd URG Flags, Bwd URG Flags, Fwd Header Length, Bwd Header Length, Fwd Packets/s, Bwd Packets/s,
Min Packet Length, Max Packet Length, Packet Length Mean, Packet Length Std, Packet Length Variance,
FIN Flag Count, SYN Flag Count, RST Flag Count, PSH Flag Count, ACK Flag Count, URG Flag Count,
CWE Flag Count, ECE Flag Count, Down/Up Ratio, Average Packet Size, Avg Fwd Segment Size,
Avg Bwd Segment Size, Fwd Header Length.1, Fwd Avg Bytes/Bulk, Fwd Avg Packets/Bulk, Fwd Avg Bulk Rate,
Bwd Avg Bytes/Bulk, Bwd Avg Packets/Bulk, Bwd Avg Bulk Rate, Subflow Fwd Packets, Subflow Fwd Bytes,
Subflow Bwd Packets, Subflow Bwd Bytes, Init_Win_bytes_forward, Init_Win_bytes_backward,
act_data_pkt_fwd, min_seg_size_forward, Active Mean, Active Std, Active Max, Active Min, Idle Mean,
Idle Std, Idle Max, Idle Min"""
cic_cols = [c.strip() for c in cic_cols.replace("\n", " ").split(",")]
assert len(cic_cols) == 78, len(cic_cols)

def names(s):
    return [c.strip() for c in s.split(",")]

cic_masks = {
    "dos": names("Subflow Fwd Packets, Subflow Fwd Bytes, Subflow Bwd Packets, Subflow Bwd Bytes, Active Std, "
                 "Active Max, Idle Mean, Idle Std, Idle Max, Idle Min"),
    "infiltration_botnet": names(
        "Flow Bytes/s, Flow Packets/s, Flow IAT Std, Fwd IAT Std, Bwd IAT Std, Fwd Header Length, "
        "Bwd Header Length, Packet Length Std, Packet Length Variance, Fwd Header Length.1, Subflow Fwd Packets, "
        "Subflow Fwd Bytes, Subflow Bwd Packets, Subflow Bwd Bytes, Active Std, Idle Std"),
    "patator": names(
        "Fwd Avg Bytes/Bulk, Fwd Avg Packets/Bulk, Fwd Avg Bulk Rate, Bwd Avg Bytes/Bulk, Bwd Avg Packets/Bulk, "
        "Bwd Avg Bulk Rate, Subflow Fwd Packets, Subflow Fwd Bytes, Subflow Bwd Packets, Subflow Bwd Bytes, "
        "Active Mean, Active Std, Active Max, Active Min, Idle Mean, Idle Std, Idle Max, Idle Min"),
    "portscan": names(
        "Packet Length Mean, Packet Length Std, Packet Length Variance, Down/Up Ratio, Average Packet Size, "
        "Avg Fwd Segment Size, Avg Bwd Segment Size, Subflow Fwd Packets, Subflow Fwd Bytes, Subflow Bwd Packets, "
        "Subflow Bwd Bytes, Active Mean, Active Std, Active Max, Active Min, Idle Mean, Idle Std, Idle Max, Idle Min"),
    "web_attack": names(
        "Fwd Packet Length Mean, Bwd Packet Length Mean, Min Packet Length, Max Packet Length, Packet Length Mean, "
        "Packet Length Std, Packet Length Variance, Down/Up Ratio, Average Packet Size"),
    "ddos": names(
        "Down/Up Ratio, Subflow Fwd Packets, Subflow Fwd Bytes, Subflow Bwd Packets, Subflow Bwd Bytes, "
        "Active Mean, Active Std, Active Max, Active Min, Idle Mean, Idle Std, Idle Max, Idle Min"),
}
assert {k: len(v) for k, v in cic_masks.items()} == {
    "dos": 10, "infiltration_botnet": 16, "patator": 18, "portscan": 19, "web_attack": 9, "ddos": 13}
for v in cic_masks.values():
    assert all(c in cic_cols for c in v), [c for c in v if c not in cic_cols]

web = ["Brute Force", "XSS", "Sql Injection"]
cic = {
    "name": "cic-ids2017",
    "label_column": "Label",
    "classes": ["normal", "dos", "ddos", "portscan", "patator", "web_attack", "infiltration_botnet"],
    "normal_class": "normal",
    "csv_header": True,
    "unknown_labels": "skip",
    "label_map": {
        "BENIGN": "normal",
        **{a: "dos" for a in ["DoS Hulk", "DoS GoldenEye", "DoS slowloris", "DoS Slowhttptest"]},
        "DDoS": "ddos",
        "PortScan": "portscan",
        "FTP-Patator": "patator", "SSH-Patator": "patator",
        **{f"Web Attack {d} {w}": "web_attack" for w in web for d in ["–", "-", "�"]},
        "Bot": "infiltration_botnet", "Infiltration": "infiltration_botnet",
    },
    "columns": [{"name": c, "kind": "continuous"} for c in cic_cols],
    "nonfunctional": {k: {"source": "published per-attack-type division", "columns": v} for k, v in cic_masks.items()},
}

for fname, doc in [("nsl_kdd.yaml", nsl), ("cic_ids2017.yaml", cic)]:
    with open(out / fname, "w", encoding="utf-8") as f:
        f.write(f"# Bundled feature schema ({doc['name']}). Regenerate with scripts/make_bundled_schemas.py.\n")
        yaml.safe_dump(doc, f, sort_keys=False, allow_unicode=True, width=100)
print("ok")
