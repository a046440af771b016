//! Package discovery and name linking.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use super::ast::{Decl, SourceUnit};
use super::diag::{Diagnostic, ErrorCode, SourceMap, Span};
use super::lexer::tokenize;
use super::parser::parse_unit;

/// Where imported packages are read from.
pub trait SourceProvider {
    fn read(&self, path: &Path) -> Option<String>;
}

pub struct FsProvider;

impl SourceProvider for FsProvider {
    fn read(&self, path: &Path) -> Option<String> {
        std::fs::read_to_string(path).ok()
    }
}

#[derive(Debug, Clone, Default)]
pub struct MemProvider {
    pub files: HashMap<PathBuf, String>,
}

impl MemProvider {
    pub fn with(mut self, path: impl Into<PathBuf>, text: impl Into<String>) -> Self {
        self.files.insert(path.into(), text.into());
        self
    }
}

impl SourceProvider for MemProvider {
    fn read(&self, path: &Path) -> Option<String> {
        self.files.get(path).cloned()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DeclRef {
    pub unit: usize,
    pub index: usize,
}

/// All units of one compilation with their cross-file name tables.
#[derive(Debug, Clone)]
pub struct Program {
    pub sources: SourceMap,
    pub units: Vec<SourceUnit>,
    /// Qualified `package.Name` → declaration.
    pub decls: BTreeMap<String, DeclRef>,
    /// Per unit: unqualified name → qualified name.
    pub scopes: Vec<HashMap<String, String>>,
    /// Packages that exist but declare nothing (the configuration package).
    pub empty_packages: Vec<String>,
}

impl Program {
    pub fn decl(&self, r: DeclRef) -> &Decl {
        &self.units[r.unit].decls[r.index]
    }

    pub fn lookup(&self, qualified: &str) -> Option<&Decl> {
        self.decls.get(qualified).map(|r| self.decl(*r))
    }

    pub fn has_package(&self, name: &str) -> bool {
        self.empty_packages.iter().any(|p| p == name) || self.units.iter().any(|u| u.package_name() == name)
    }

    /// Resolves a dotted path written in `unit` to a qualified declaration.
    pub fn resolve_path(&self, unit: usize, path: &[String]) -> Option<String> {
        match path {
            [single] => self.scopes[unit].get(single).cloned(),
            [pkg @ .., name] => {
                let q = format!("{}.{}", pkg.join("."), name);
                self.decls.contains_key(&q).then_some(q)
            }
            [] => None,
        }
    }
}

/// Loads and parses one file; a missing `package` line defaults to the
/// file stem.
pub fn parse_source(sources: &mut SourceMap, name: &str, text: &str) -> Result<SourceUnit, Diagnostic> {
    let file = sources.add(name, text);
    let stem = Path::new(name).file_stem().and_then(|s| s.to_str()).unwrap_or("main");
    let toks = tokenize(text, file)?;
    parse_unit(&toks, file, stem)
}

fn candidate_paths(search_paths: &[PathBuf], package: &str) -> Vec<PathBuf> {
    let nested = format!("{}.qu", package.replace('.', "/"));
    let flat = format!("{package}.qu");
    let mut out = Vec::new();
    for dir in search_paths {
        out.push(dir.join(&nested));
        if flat != nested {
            out.push(dir.join(&flat));
        }
    }
    out
}

/// Parses `roots`, then pulls in every transitively imported package from
/// `search_paths`, and builds the per-unit scopes.
pub fn load_program(
    roots: &[(String, String)],
    search_paths: &[PathBuf],
    provider: &dyn SourceProvider,
    config_package: Option<&str>,
) -> Result<Program, (Diagnostic, SourceMap)> {
    let mut sources = SourceMap::new();
    let mut units = Vec::new();
    for (name, text) in roots {
        match parse_source(&mut sources, name, text) {
            Ok(u) => units.push(u),
            Err(d) => return Err((d, sources)),
        }
    }
    let empty_packages: Vec<String> = config_package.map(str::to_string).into_iter().collect();
    let mut i = 0;
    while i < units.len() {
        let imports = units[i].imports.clone();
        for imp in imports {
            let pkg = imp.package();
            let known = empty_packages.contains(&pkg) || units.iter().any(|u| u.package_name() == pkg);
            if known {
                continue;
            }
            let mut found = false;
            for path in candidate_paths(search_paths, &pkg) {
                let Some(text) = provider.read(&path) else { continue };
                let unit = match parse_source(&mut sources, &path.to_string_lossy(), &text) {
                    Ok(u) => u,
                    Err(d) => return Err((d, sources)),
                };
                if unit.package_name() == pkg {
                    units.push(unit);
                    found = true;
                    break;
                }
            }
            if !found {
                let d = Diagnostic::new(ErrorCode::UnresolvedImport, imp.span, format!("cannot find package `{pkg}`"));
                return Err((d, sources));
            }
        }
        i += 1;
    }
    match link(units, sources, empty_packages) {
        Ok(p) => Ok(p),
        Err((d, s)) => Err((d, s)),
    }
}

fn link(
    units: Vec<SourceUnit>,
    sources: SourceMap,
    empty_packages: Vec<String>,
) -> Result<Program, (Diagnostic, SourceMap)> {
    let mut decls: BTreeMap<String, DeclRef> = BTreeMap::new();
    let mut by_package: BTreeMap<String, Vec<(String, String)>> = BTreeMap::new();
    for (ui, u) in units.iter().enumerate() {
        let pkg = u.package_name();
        by_package.entry(pkg.clone()).or_default();
        for (di, d) in u.decls.iter().enumerate() {
            let q = format!("{pkg}.{}", d.name().name);
            if decls.insert(q.clone(), DeclRef { unit: ui, index: di }).is_some() {
                let diag = Diagnostic::new(
                    ErrorCode::Duplicate,
                    d.name().span,
                    format!("`{}` is declared more than once in package `{pkg}`", d.name().name),
                );
                return Err((diag, sources));
            }
            by_package.get_mut(&pkg).unwrap().push((d.name().name.clone(), q));
        }
    }
    for p in &empty_packages {
        by_package.entry(p.clone()).or_default();
    }
    let mut scopes = Vec::with_capacity(units.len());
    for u in &units {
        let mut imported: HashMap<String, (String, Span)> = HashMap::new();
        for imp in &u.imports {
            let pkg = imp.package();
            let Some(members) = by_package.get(&pkg) else {
                let d = Diagnostic::new(ErrorCode::UnresolvedImport, imp.span, format!("cannot find package `{pkg}`"));
                return Err((d, sources));
            };
            let chosen: Vec<&(String, String)> = if imp.wildcard {
                members.iter().collect()
            } else {
                let name = imp.path.last().unwrap();
                let m: Vec<_> = members.iter().filter(|(n, _)| n == name).collect();
                if m.is_empty() {
                    let d = Diagnostic::new(
                        ErrorCode::UnresolvedImport,
                        imp.span,
                        format!("package `{pkg}` has no declaration `{name}`"),
                    );
                    return Err((d, sources));
                }
                m
            };
            for (name, q) in chosen {
                if let Some((prev, _)) = imported.get(name) {
                    if prev != q {
                        let d = Diagnostic::new(
                            ErrorCode::AmbiguousName,
                            imp.span,
                            format!("`{name}` is imported from both `{prev}` and `{q}`"),
                        );
                        return Err((d, sources));
                    }
                }
                imported.insert(name.clone(), (q.clone(), imp.span));
            }
        }
        let mut scope: HashMap<String, String> = imported.into_iter().map(|(k, (q, _))| (k, q)).collect();
        for (name, q) in &by_package[&u.package_name()] {
            scope.insert(name.clone(), q.clone());
        }
        scopes.push(scope);
    }
    Ok(Program { sources, units, decls, scopes, empty_packages })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roots(src: &str) -> Vec<(String, String)> {
        vec![("kernel.qu".to_string(), src.to_string())]
    }

    const OPS: &str = "package operations;\nopaque H(q: qubit): unit;\nopaque measure(q: qubit): bool;\n";

    #[test]
    fn wildcard_import_resolves() {
        let fs = MemProvider::default().with("lib/operations.qu", OPS);
        let p = load_program(
            &roots("import operations.*\noperation f(q: qubit): bool { H(q); return measure(q); }"),
            &[PathBuf::from("lib")],
            &fs,
            None,
        )
        .unwrap();
        assert_eq!(p.units.len(), 2);
        assert_eq!(p.scopes[0]["H"], "operations.H");
        assert_eq!(p.resolve_path(0, &["operations".into(), "measure".into()]).as_deref(), Some("operations.measure"));
    }

    #[test]
    fn no_imports_is_identity() {
        let p = load_program(&roots("operation f(): unit {}"), &[], &MemProvider::default(), None).unwrap();
        assert_eq!(p.units.len(), 1);
        assert_eq!(p.scopes[0]["f"], "kernel.f");
    }

    #[test]
    fn missing_package_is_unresolved() {
        let (d, _) = load_program(&roots("import nope.*\n"), &[], &MemProvider::default(), None).unwrap_err();
        assert_eq!(d.code, ErrorCode::UnresolvedImport);
    }

    #[test]
    fn config_package_is_importable() {
        load_program(&roots("import config.json.*\n"), &[], &MemProvider::default(), Some("config.json")).unwrap();
    }

    #[test]
    fn conflicting_imports_are_ambiguous() {
        let fs = MemProvider::default()
            .with("a.qu", "package a; opaque H(q: qubit): unit;")
            .with("b.qu", "package b; opaque H(q: qubit): unit;");
        let (d, _) = load_program(&roots("import a.*\nimport b.*\n"), &[PathBuf::from("")], &fs, None).unwrap_err();
        assert_eq!(d.code, ErrorCode::AmbiguousName);
    }

    #[test]
    fn duplicate_declaration() {
        let (d, _) =
            load_program(&roots("operation f(): unit {}\noperation f(): unit {}"), &[], &MemProvider::default(), None)
                .unwrap_err();
        assert_eq!(d.code, ErrorCode::Duplicate);
    }
}
