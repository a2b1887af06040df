use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::{Path, PathBuf};

use csv::StringRecord;

use super::{
    CorpusError, CountryRecord, Entity, EntityKind, LabelTable, LexicalSimilarityTable,
    PrestigeClass, SetKind, Side, Template,
};
use crate::numerics::Coordinate;

/// Locations of the catalog files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatalogPaths {
    pub countries: PathBuf,
    pub country_labels: PathBuf,
    pub label_partition: PathBuf,
    pub jobs: PathBuf,
    pub templates: PathBuf,
    pub lexsim: PathBuf,
    pub lang_country: Option<PathBuf>,
}

impl CatalogPaths {
    /// Standard file names inside one data directory.
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        let lang_country = dir.join("lang_country.csv");
        Self {
            countries: dir.join("countries.csv"),
            country_labels: dir.join("country_labels.csv"),
            label_partition: dir.join("label_partition.csv"),
            jobs: dir.join("jobs.csv"),
            templates: dir.join("templates.csv"),
            lexsim: dir.join("lexsim.csv"),
            lang_country: lang_country.exists().then_some(lang_country),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadOptions {
    /// Country ids dropped after loading.
    pub exclude_countries: Vec<String>,
}

/// Everything loaded from the catalog files, cross-referenced.
#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    /// Countries first (file order), then jobs (file order).
    pub entities: Vec<Entity>,
    pub countries: Vec<CountryRecord>,
    pub label_table: LabelTable,
    pub lexsim: LexicalSimilarityTable,
    pub templates: Vec<Template>,
    /// Language code to the country standing in for it.
    pub lang_country: BTreeMap<String, String>,
}

impl Catalog {
    pub fn entities_of(&self, kind: EntityKind) -> Vec<Entity> {
        self.entities
            .iter()
            .filter(|e| e.kind == kind)
            .cloned()
            .collect()
    }

    pub fn country(&self, id: &str) -> Option<&CountryRecord> {
        self.countries.iter().find(|c| c.id == id)
    }

    pub fn country_ids(&self) -> Vec<String> {
        self.countries.iter().map(|c| c.id.clone()).collect()
    }

    pub fn gdp(&self) -> BTreeMap<String, f64> {
        self.countries
            .iter()
            .map(|c| (c.id.clone(), c.gdp_ppp_2019))
            .collect()
    }

    pub fn job_classes(&self) -> BTreeMap<String, PrestigeClass> {
        self.entities
            .iter()
            .filter_map(|e| e.prestige_class.map(|c| (e.id.clone(), c)))
            .collect()
    }

    /// Templates of one set in one language, ordered by index.
    pub fn templates_for(&self, set_kind: SetKind, language: &str) -> Vec<Template> {
        let mut out: Vec<Template> = self
            .templates
            .iter()
            .filter(|t| t.set_kind == set_kind && t.language == language)
            .cloned()
            .collect();
        out.sort_by_key(|t| t.index);
        out
    }

    /// Languages with at least one template.
    pub fn template_languages(&self) -> BTreeSet<String> {
        self.templates.iter().map(|t| t.language.clone()).collect()
    }
}

/// Loads and cross-checks every catalog file.
pub fn load_catalog(paths: &CatalogPaths, options: &LoadOptions) -> Result<Catalog, CorpusError> {
    let (vocabulary, partition) = load_partition(&paths.label_partition)?;
    let mut countries = load_countries(&paths.countries)?;
    attach_labels(&paths.country_labels, &vocabulary, &mut countries)?;
    let jobs = load_jobs(&paths.jobs)?;
    let templates = load_templates(&paths.templates)?;
    let lexsim = load_lexsim(&paths.lexsim)?;
    let known: HashSet<&str> = countries.iter().map(|(c, _)| c.id.as_str()).collect();
    let lang_country = match &paths.lang_country {
        Some(p) => load_lang_country(p, &known)?,
        None => BTreeMap::new(),
    };

    let excluded: HashSet<&str> = options
        .exclude_countries
        .iter()
        .map(String::as_str)
        .collect();
    countries.retain(|(c, _)| !excluded.contains(c.id.as_str()));
    if countries.is_empty() {
        return Err(CorpusError::NoEntities(EntityKind::Country));
    }

    let label_table = LabelTable {
        labels: vocabulary.clone(),
        country_ids: countries.iter().map(|(c, _)| c.id.clone()).collect(),
        matrix: countries
            .iter()
            .map(|(c, _)| vocabulary.iter().map(|l| c.labels.contains(l)).collect())
            .collect(),
        partition,
    };

    let mut entities: Vec<Entity> = countries.iter().map(|(_, e)| e.clone()).collect();
    entities.extend(jobs);

    Ok(Catalog {
        entities,
        countries: countries.into_iter().map(|(c, _)| c).collect(),
        label_table,
        lexsim,
        templates,
        lang_country,
    })
}

struct CsvFile {
    path: PathBuf,
    headers: StringRecord,
    records: Vec<(u64, StringRecord)>,
}

impl CsvFile {
    fn open(path: &Path) -> Result<Self, CorpusError> {
        let file = std::fs::File::open(path).map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(file);
        let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
        let mut records = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| csv_error(path, e))?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            records.push((line, rec));
        }
        Ok(Self {
            path: path.to_path_buf(),
            headers,
            records,
        })
    }

    fn column(&self, name: &str) -> Result<usize, CorpusError> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CorpusError::Malformed {
                path: self.path.clone(),
                line: 1,
                message: format!("missing column {name:?}"),
            })
    }

    fn malformed(&self, line: u64, message: impl Into<String>) -> CorpusError {
        CorpusError::Malformed {
            path: self.path.clone(),
            line,
            message: message.into(),
        }
    }

    fn field<'a>(
        &self,
        line: u64,
        rec: &'a StringRecord,
        col: usize,
        name: &str,
    ) -> Result<&'a str, CorpusError> {
        match rec.get(col) {
            Some(v) if !v.is_empty() => Ok(v),
            _ => Err(self.malformed(line, format!("empty {name}"))),
        }
    }

    fn number(
        &self,
        line: u64,
        rec: &StringRecord,
        col: usize,
        name: &str,
    ) -> Result<f64, CorpusError> {
        let raw = self.field(line, rec, col, name)?;
        raw.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| self.malformed(line, format!("{name} {raw:?} is not a number")))
    }

    /// Extra `<prefix><lang>` columns, e.g. `name_de`.
    fn prefixed_columns(&self, prefix: &str) -> Vec<(usize, String)> {
        self.headers
            .iter()
            .enumerate()
            .filter_map(|(i, h)| h.strip_prefix(prefix).map(|lang| (i, lang.to_string())))
            .filter(|(_, lang)| !lang.is_empty())
            .collect()
    }
}

fn csv_error(path: &Path, e: csv::Error) -> CorpusError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    CorpusError::Malformed {
        path: path.to_path_buf(),
        line,
        message: e.to_string(),
    }
}

fn load_partition(path: &Path) -> Result<(Vec<String>, BTreeMap<String, Side>), CorpusError> {
    let f = CsvFile::open(path)?;
    let (cl, cs) = (f.column("label")?, f.column("side")?);
    let mut vocabulary = Vec::new();
    let mut partition = BTreeMap::new();
    for (line, rec) in &f.records {
        let label = f.field(*line, rec, cl, "label")?;
        let side: Side = f
            .field(*line, rec, cs, "side")?
            .parse()
            .map_err(|m: String| f.malformed(*line, m))?;
        if partition.insert(label.to_string(), side).is_some() {
            return Err(CorpusError::DuplicateId {
                path: f.path.clone(),
                line: *line,
                id: label.to_string(),
            });
        }
        vocabulary.push(label.to_string());
    }
    Ok((vocabulary, partition))
}

fn load_countries(path: &Path) -> Result<Vec<(CountryRecord, Entity)>, CorpusError> {
    let f = CsvFile::open(path)?;
    let cid = f.column("id")?;
    let cname = f.column("name_en")?;
    let cgdp = f.column("gdp_ppp_2019")?;
    let clat = f.column("lat")?;
    let clon = f.column("lon")?;
    let extra = f.prefixed_columns("name_");
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (line, rec) in &f.records {
        let id = f.field(*line, rec, cid, "id")?.to_string();
        if !seen.insert(id.clone()) {
            return Err(CorpusError::DuplicateId {
                path: f.path.clone(),
                line: *line,
                id,
            });
        }
        let name_en = f.field(*line, rec, cname, "name_en")?.to_string();
        let gdp = f.number(*line, rec, cgdp, "gdp_ppp_2019")?;
        if gdp <= 0.0 {
            return Err(f.malformed(*line, format!("gdp_ppp_2019 must be positive, got {gdp}")));
        }
        let lat = f.number(*line, rec, clat, "lat")?;
        let lon = f.number(*line, rec, clon, "lon")?;
        let coordinate =
            Coordinate::new(lat, lon).map_err(|e| f.malformed(*line, e.to_string()))?;

        let mut surface_forms = BTreeMap::new();
        for (col, lang) in &extra {
            if let Some(v) = rec.get(*col).filter(|v| !v.is_empty()) {
                surface_forms.insert(lang.clone(), v.to_string());
            }
        }
        out.push((
            CountryRecord {
                id: id.clone(),
                name_en,
                gdp_ppp_2019: gdp,
                coordinate,
                labels: BTreeSet::new(),
            },
            Entity {
                id,
                kind: EntityKind::Country,
                surface_forms,
                prestige_class: None,
            },
        ));
    }
    if out.is_empty() {
        return Err(CorpusError::NoEntities(EntityKind::Country));
    }
    Ok(out)
}

fn attach_labels(
    path: &Path,
    vocabulary: &[String],
    countries: &mut [(CountryRecord, Entity)],
) -> Result<(), CorpusError> {
    let f = CsvFile::open(path)?;
    let (cc, cl) = (f.column("country_id")?, f.column("label")?);
    let vocab: HashSet<&str> = vocabulary.iter().map(String::as_str).collect();
    for (line, rec) in &f.records {
        let id = f.field(*line, rec, cc, "country_id")?;
        let label = f.field(*line, rec, cl, "label")?;
        if !vocab.contains(label) {
            return Err(CorpusError::UnknownLabel {
                path: f.path.clone(),
                line: *line,
                label: label.to_string(),
            });
        }
        let Some((country, _)) = countries.iter_mut().find(|(c, _)| c.id == id) else {
            return Err(CorpusError::UnknownCountry {
                path: f.path.clone(),
                line: *line,
                id: id.to_string(),
            });
        };
        if !country.labels.insert(label.to_string()) {
            return Err(f.malformed(*line, format!("duplicate label {label:?} for {id}")));
        }
    }
    Ok(())
}

fn load_jobs(path: &Path) -> Result<Vec<Entity>, CorpusError> {
    let f = CsvFile::open(path)?;
    let cid = f.column("id")?;
    let cclass = f.column("prestige_class")?;
    let extra = f.prefixed_columns("surface_");
    if !extra.iter().any(|(_, l)| l == "en") {
        return Err(f.malformed(1, "missing column \"surface_en\""));
    }
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (line, rec) in &f.records {
        let id = f.field(*line, rec, cid, "id")?.to_string();
        if !seen.insert(id.clone()) {
            return Err(CorpusError::DuplicateId {
                path: f.path.clone(),
                line: *line,
                id,
            });
        }
        let class = match f.field(*line, rec, cclass, "prestige_class")? {
            "low" => PrestigeClass::Low,
            "high" => PrestigeClass::High,
            other => return Err(f.malformed(*line, format!("unknown prestige class {other:?}"))),
        };
        let mut surface_forms = BTreeMap::new();
        for (col, lang) in &extra {
            if let Some(v) = rec.get(*col).filter(|v| !v.is_empty()) {
                surface_forms.insert(lang.clone(), v.to_string());
            }
        }
        if !surface_forms.contains_key("en") {
            return Err(f.malformed(*line, "empty surface_en"));
        }
        out.push(Entity {
            id,
            kind: EntityKind::Job,
            surface_forms,
            prestige_class: Some(class),
        });
    }
    if out.is_empty() {
        return Err(CorpusError::NoEntities(EntityKind::Job));
    }
    Ok(out)
}

fn load_templates(path: &Path) -> Result<Vec<Template>, CorpusError> {
    let f = CsvFile::open(path)?;
    let ck = f.column("set_kind")?;
    let cl = f.column("language")?;
    let ci = f.column("index")?;
    let ct = f.column("text")?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (line, rec) in &f.records {
        let kind: SetKind = f
            .field(*line, rec, ck, "set_kind")?
            .parse()
            .map_err(|m: String| f.malformed(*line, m))?;
        let language = f.field(*line, rec, cl, "language")?;
        let raw_index = f.field(*line, rec, ci, "index")?;
        let index: usize = raw_index.parse().map_err(|_| {
            f.malformed(
                *line,
                format!("index {raw_index:?} is not a non-negative integer"),
            )
        })?;
        let text = f.field(*line, rec, ct, "text")?;
        let template = Template::new(kind, language, index, text)
            .map_err(|e| f.malformed(*line, e.to_string()))?;
        if !seen.insert((kind, language.to_string(), index)) {
            return Err(CorpusError::DuplicateId {
                path: f.path.clone(),
                line: *line,
                id: format!("{kind}/{language}/{index}"),
            });
        }
        out.push(template);
    }
    Ok(out)
}

fn load_lexsim(path: &Path) -> Result<LexicalSimilarityTable, CorpusError> {
    let f = CsvFile::open(path)?;
    let ca = f.column("lang_a")?;
    let cb = f.column("lang_b")?;
    let cs = f.column("similarity")?;
    let mut table = LexicalSimilarityTable::default();
    for (line, rec) in &f.records {
        let a = f.field(*line, rec, ca, "lang_a")?;
        let b = f.field(*line, rec, cb, "lang_b")?;
        let s = f.number(*line, rec, cs, "similarity")?;
        table.insert(a, b, s).map_err(|m| f.malformed(*line, m))?;
    }
    Ok(table)
}

fn load_lang_country(
    path: &Path,
    known: &HashSet<&str>,
) -> Result<BTreeMap<String, String>, CorpusError> {
    let f = CsvFile::open(path)?;
    let cl = f.column("language")?;
    let cc = f.column("country_id")?;
    let mut out = BTreeMap::new();
    for (line, rec) in &f.records {
        let lang = f.field(*line, rec, cl, "language")?;
        let country = f.field(*line, rec, cc, "country_id")?;
        if !known.contains(country) {
            return Err(CorpusError::UnknownCountry {
                path: f.path.clone(),
                line: *line,
                id: country.to_string(),
            });
        }
        if out.insert(lang.to_string(), country.to_string()).is_some() {
            return Err(CorpusError::DuplicateId {
                path: f.path.clone(),
                line: *line,
                id: lang.to_string(),
            });
        }
    }
    Ok(out)
}
