//! Single-file store snapshots.
//!
//! Layout: the magic bytes `FFGRAPH1`, then six length-prefixed tables
//! (little-endian `u64` byte length, then UTF-8 JSON lines): meta, articles,
//! sections, entities, has_section, has_entity. A little-endian CRC-32 of
//! every preceding byte closes the file.

use std::fs;
use std::io::Write;
use std::path::Path;

use claimgraph_core::graph::{ArticleRow, HasEntityRow, HasSectionRow, SectionRow};
use claimgraph_core::{EntityRef, GraphStats, GraphStore, StoreTables};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const MAGIC: &[u8; 8] = b"FFGRAPH1";

#[derive(Debug, thiserror::Error)]
pub enum SnapshotError {
    #[error("snapshot io on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt snapshot: {0}")]
    Corrupt(String),
}

#[derive(Serialize, Deserialize)]
struct Meta {
    next_article: u64,
    next_section: u64,
}

fn put_table<T: Serialize>(out: &mut Vec<u8>, rows: &[T]) {
    let mut body = Vec::new();
    for row in rows {
        serde_json::to_writer(&mut body, row).expect("table rows serialize");
        body.push(b'\n');
    }
    out.extend_from_slice(&(body.len() as u64).to_le_bytes());
    out.extend_from_slice(&body);
}

pub fn encode(store: &GraphStore) -> Vec<u8> {
    let t = store.to_tables();
    let mut out = Vec::from(&MAGIC[..]);
    put_table(
        &mut out,
        &[Meta {
            next_article: t.next_article,
            next_section: t.next_section,
        }],
    );
    put_table(&mut out, &t.articles);
    put_table(&mut out, &t.sections);
    put_table(&mut out, &t.entities);
    put_table(&mut out, &t.has_section);
    put_table(&mut out, &t.has_entity);
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    table: usize,
}

impl Reader<'_> {
    fn table<T: DeserializeOwned>(&mut self, name: &str) -> Result<Vec<T>, SnapshotError> {
        self.table += 1;
        let corrupt = |why: String| SnapshotError::Corrupt(format!("table {name}: {why}"));
        if self.buf.len() < 8 {
            return Err(corrupt("truncated length".into()));
        }
        let (len, rest) = self.buf.split_at(8);
        let len = u64::from_le_bytes(len.try_into().expect("8 bytes"));
        let len = usize::try_from(len).map_err(|_| corrupt("length overflow".into()))?;
        if rest.len() < len {
            return Err(corrupt("truncated body".into()));
        }
        let (body, rest) = rest.split_at(len);
        self.buf = rest;
        let text = std::str::from_utf8(body).map_err(|e| corrupt(e.to_string()))?;
        text.lines()
            .enumerate()
            .map(|(i, line)| {
                serde_json::from_str(line).map_err(|e| corrupt(format!("row {}: {e}", i + 1)))
            })
            .collect()
    }
}

pub fn decode(bytes: &[u8]) -> Result<GraphStore, SnapshotError> {
    if bytes.len() < MAGIC.len() + 4 || &bytes[..MAGIC.len()] != MAGIC {
        return Err(SnapshotError::Corrupt("bad magic or version".into()));
    }
    let (payload, crc) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(crc.try_into().expect("4 bytes"));
    if crc32fast::hash(payload) != stored {
        return Err(SnapshotError::Corrupt("checksum mismatch".into()));
    }
    let mut r = Reader {
        buf: &payload[MAGIC.len()..],
        table: 0,
    };
    let meta: Vec<Meta> = r.table("meta")?;
    let [meta] = <[Meta; 1]>::try_from(meta)
        .map_err(|_| SnapshotError::Corrupt("meta must hold one row".into()))?;
    let tables = StoreTables {
        next_article: meta.next_article,
        next_section: meta.next_section,
        articles: r.table::<ArticleRow>("articles")?,
        sections: r.table::<SectionRow>("sections")?,
        entities: r.table::<EntityRef>("entities")?,
        has_section: r.table::<HasSectionRow>("has_section")?,
        has_entity: r.table::<HasEntityRow>("has_entity")?,
    };
    if !r.buf.is_empty() {
        return Err(SnapshotError::Corrupt(format!(
            "{} trailing bytes after {} tables",
            r.buf.len(),
            r.table
        )));
    }
    GraphStore::from_tables(tables).map_err(|e| SnapshotError::Corrupt(e.to_string()))
}

#[derive(Serialize)]
struct ExportLine<'a, T> {
    table: &'a str,
    row: &'a T,
}

fn export_table<T: Serialize>(
    out: &mut impl Write,
    table: &str,
    rows: &[T],
) -> std::io::Result<()> {
    for row in rows {
        serde_json::to_writer(&mut *out, &ExportLine { table, row })?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Writes every node and edge as `{"table": name, "row": {...}}` lines, in
/// snapshot table order. Intended for inspection and external tooling.
pub fn export_jsonl(store: &GraphStore, mut out: impl Write) -> std::io::Result<()> {
    let t = store.to_tables();
    export_table(&mut out, "articles", &t.articles)?;
    export_table(&mut out, "sections", &t.sections)?;
    export_table(&mut out, "entities", &t.entities)?;
    export_table(&mut out, "has_section", &t.has_section)?;
    export_table(&mut out, "has_entity", &t.has_entity)?;
    out.flush()
}

/// Writes the snapshot through a temporary sibling file and a rename, so
/// readers never observe a partial file.
pub fn save_snapshot(
    store: &GraphStore,
    path: impl AsRef<Path>,
) -> Result<GraphStats, SnapshotError> {
    let path = path.as_ref();
    let io = |source| SnapshotError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let mut file = fs::File::create(&tmp).map_err(io)?;
    file.write_all(&encode(store)).map_err(io)?;
    file.sync_all().map_err(io)?;
    fs::rename(&tmp, path).map_err(io)?;
    Ok(store.stats())
}

pub fn load_snapshot(path: impl AsRef<Path>) -> Result<GraphStore, SnapshotError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| SnapshotError::Io {
        path: path.display().to_string(),
        source,
    })?;
    decode(&bytes)
}

/// Loads the snapshot, or returns an empty store when the file is absent.
pub fn load_or_empty(path: impl AsRef<Path>) -> Result<GraphStore, SnapshotError> {
    let path = path.as_ref();
    if path.exists() {
        load_snapshot(path)
    } else {
        Ok(GraphStore::new())
    }
}
