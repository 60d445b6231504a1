#!/usr/bin/env python3
"""Convert an OpenWPM crawl database into the crawl JSONL read by cnamecloak.

    openwpm_to_jsonl.py crawl-data.sqlite crawl.jsonl [--meta sites.csv]

Each output line is one request:

    {"site_id", "site_domain", "url", "method", "content_type", "is_xhr",
     "is_third_party_window", "timestamp"}

The first line of every site also carries "site_meta" with ranking,
country, category and script_call_count.  Ranking, country and category
come from the optional --meta CSV (columns site_domain, ranking, country,
category); sites missing from it get 0 / UNK / UNK.
"""

import argparse
import csv
import json
import sqlite3
import sys
from datetime import datetime
from urllib.parse import urlsplit

# Firefox nsIContentPolicy numbers, for databases from before resource_type
CONTENT_POLICY = {
    1: "other", 2: "script", 3: "image", 4: "stylesheet", 5: "object",
    6: "main_frame", 7: "sub_frame", 10: "ping", 11: "xmlhttprequest",
    12: "object_subrequest", 14: "font", 15: "media", 16: "websocket",
    17: "csp_report", 19: "beacon", 20: "xmlhttprequest", 21: "imageset",
}


def columns(db, table):
    return {row[1] for row in db.execute(f"PRAGMA table_info({table})")}


def timestamp(value):
    if value is None:
        return 0.0
    if isinstance(value, (int, float)):
        return float(value)
    try:
        return datetime.fromisoformat(str(value).replace("Z", "+00:00")).timestamp()
    except ValueError:
        return 0.0


def load_meta(path):
    meta = {}
    if path:
        with open(path, newline="") as f:
            for row in csv.DictReader(f):
                meta[row["site_domain"].lower()] = row
    return meta


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("database")
    ap.add_argument("output")
    ap.add_argument("--meta")
    args = ap.parse_args()

    db = sqlite3.connect(args.database)
    meta = load_meta(args.meta)
    req_cols = columns(db, "http_requests")
    type_col = "resource_type" if "resource_type" in req_cols else "content_policy_type"
    xhr_col = "is_XHR" if "is_XHR" in req_cols else "is_xhr"
    window_col = "is_third_party_window" if "is_third_party_window" in req_cols else None

    script_calls = {}
    if db.execute("SELECT name FROM sqlite_master WHERE name='javascript'").fetchone():
        script_calls = dict(db.execute("SELECT visit_id, COUNT(*) FROM javascript GROUP BY visit_id"))

    sites = db.execute("SELECT visit_id, site_url FROM site_visits ORDER BY visit_id").fetchall()
    written = 0
    with open(args.output, "w") as out:
        for visit_id, site_url in sites:
            host = (urlsplit(site_url).hostname or "").lower()
            if not host:
                print(f"skipping visit {visit_id}: no host in {site_url!r}", file=sys.stderr)
                continue
            m = meta.get(host) or meta.get(host.removeprefix("www.")) or {}
            query = (f"SELECT url, method, {type_col}, {xhr_col}, "
                     f"{window_col or '0'}, time_stamp FROM http_requests "
                     "WHERE visit_id = ? ORDER BY id")
            first = True
            for url, method, ctype, xhr, third_window, ts in db.execute(query, (visit_id,)):
                if isinstance(ctype, int):
                    ctype = CONTENT_POLICY.get(ctype, "other")
                line = {
                    "site_id": str(visit_id),
                    "site_domain": host,
                    "url": url,
                    "method": (method or "GET").upper(),
                    "content_type": ctype or "other",
                    "is_xhr": bool(xhr),
                    "is_third_party_window": bool(third_window),
                    "timestamp": timestamp(ts),
                }
                if first:
                    line["site_meta"] = {
                        "ranking": int(m.get("ranking") or 0),
                        "country": m.get("country") or "UNK",
                        "category": m.get("category") or "UNK",
                        "script_call_count": int(script_calls.get(visit_id, 0)),
                    }
                    first = False
                out.write(json.dumps(line) + "\n")
                written += 1
    print(f"{len(sites)} visits, {written} requests", file=sys.stderr)


if __name__ == "__main__":
    main()
