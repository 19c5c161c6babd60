//! Deck assembly and the round-trip oracle.
//!
//! [`assemble_deck`] wraps compiled slide parts in a complete OOXML package:
//! content types, package relationships, presentation part, one embedded
//! slide master/layout/theme, document properties, and media. Output is
//! byte-deterministic: entries are written in lexicographic order, with a
//! fixed timestamp and a fixed compression level, so equal inputs produce
//! equal archives on any platform.
//!
//! [`read_back`] is the inverse used by round-trip tests: it reopens an
//! assembled archive and recovers every layout block's geometry in EMU from
//! the shape names the compiler embeds (`blk:<role>:<id>`).

use std::collections::BTreeMap;
use std::io::{Cursor, Read, Write};

use slidesmith_core::pptx::{xml_escape, SlidePart};
use zip::write::SimpleFileOptions;
use zip::{CompressionMethod, ZipArchive, ZipWriter};

/// Fixed deflate level; part of the byte-determinism contract.
const DEFLATE_LEVEL: i64 = 6;

/// Fixed document timestamp written into docProps/core.xml, again so two
/// assemblies of the same deck are byte-identical.
const DOC_TIMESTAMP: &str = "2024-01-01T00:00:00Z";

/// Slide size written into presentation.xml: 13.333in x 7.5in in EMU.
pub const SLIDE_CX_EMU: i64 = 12_191_695;
pub const SLIDE_CY_EMU: i64 = 6_858_000;

#[derive(Debug, thiserror::Error)]
pub enum ArchiveError {
    #[error("cannot assemble a deck with zero slides")]
    EmptyDeck,
    #[error("media collision: {path} appears with two different byte contents")]
    MediaCollision { path: String },
    #[error("archive cannot be opened or is truncated: {0}")]
    CorruptArchive(String),
    #[error("required part {0} is missing from the archive")]
    MissingPart(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("zip error: {0}")]
    Zip(#[from] zip::result::ZipError),
}

/// Deck-level metadata stamped into docProps.
#[derive(Debug, Clone)]
pub struct DeckMeta {
    pub title: String,
    pub author: String,
}

impl Default for DeckMeta {
    fn default() -> Self {
        Self { title: String::from("Untitled deck"), author: String::from("slidesmith") }
    }
}

/// A finished `.pptx` in memory.
#[derive(Debug, Clone)]
pub struct PptxArchive {
    pub bytes: Vec<u8>,
}

impl PptxArchive {
    /// Entry names in archive (and therefore lexicographic) order.
    pub fn entry_names(&self) -> Result<Vec<String>, ArchiveError> {
        let mut zip = open_zip(&self.bytes)?;
        Ok((0..zip.len())
            .map(|i| zip.by_index(i).map(|f| f.name().to_string()))
            .collect::<Result<_, _>>()?)
    }
}

/// Assemble compiled slide parts into a complete archive. Slides keep the
/// given order; media are deduplicated by path and must agree byte-for-byte.
pub fn assemble_deck(parts: &[SlidePart], meta: &DeckMeta) -> Result<PptxArchive, ArchiveError> {
    if parts.is_empty() {
        return Err(ArchiveError::EmptyDeck);
    }

    // BTreeMap gives the lexicographic entry order for free.
    let mut entries: BTreeMap<String, Vec<u8>> = BTreeMap::new();
    let mut put = |name: &str, body: String| {
        entries.insert(name.to_string(), body.into_bytes());
    };

    put("[Content_Types].xml", content_types_xml(parts.len()));
    put("_rels/.rels", PACKAGE_RELS.to_string());
    put("docProps/app.xml", app_xml(parts.len()));
    put("docProps/core.xml", core_xml(meta));
    put("ppt/presentation.xml", presentation_xml(parts.len()));
    put("ppt/_rels/presentation.xml.rels", presentation_rels_xml(parts.len()));
    put("ppt/slideMasters/slideMaster1.xml", SLIDE_MASTER.to_string());
    put("ppt/slideMasters/_rels/slideMaster1.xml.rels", SLIDE_MASTER_RELS.to_string());
    put("ppt/slideLayouts/slideLayout1.xml", SLIDE_LAYOUT.to_string());
    put("ppt/slideLayouts/_rels/slideLayout1.xml.rels", SLIDE_LAYOUT_RELS.to_string());
    put("ppt/theme/theme1.xml", THEME.to_string());

    for (i, part) in parts.iter().enumerate() {
        let n = i + 1;
        entries.insert(format!("ppt/slides/slide{n}.xml"), part.xml.clone().into_bytes());
        entries.insert(
            format!("ppt/slides/_rels/slide{n}.xml.rels"),
            slide_rels_xml(part).into_bytes(),
        );
        for item in &part.media {
            match entries.get(&item.path) {
                Some(existing) if *existing != item.bytes => {
                    return Err(ArchiveError::MediaCollision { path: item.path.clone() });
                }
                Some(_) => {}
                None => {
                    entries.insert(item.path.clone(), item.bytes.clone());
                }
            }
        }
    }

    let options = SimpleFileOptions::default()
        .compression_method(CompressionMethod::Deflated)
        .compression_level(Some(DEFLATE_LEVEL))
        .last_modified_time(zip::DateTime::default()); // 1980-01-01 00:00:00

    let mut writer = ZipWriter::new(Cursor::new(Vec::new()));
    for (name, body) in &entries {
        writer.start_file(name.as_str(), options)?;
        writer.write_all(body)?;
    }
    let bytes = writer.finish()?.into_inner();
    Ok(PptxArchive { bytes })
}

// --- package boilerplate ---

fn content_types_xml(slides: usize) -> String {
    let mut out = String::from(
        "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\
         <Types xmlns=\"http://schemas.openxmlformats.org/package/2006/content-types\">\
         <Default Extension=\"rels\" ContentType=\"application/vnd.openxmlformats-package.relationships+xml\"/>\
         <Default Extension=\"xml\" ContentType=\"application/xml\"/>\
         <Default Extension=\"png\" ContentType=\"image/png\"/>\
         <Default Extension=\"jpeg\" ContentType=\"image/jpeg\"/>\
         <Override PartName=\"/ppt/presentation.xml\" ContentType=\"application/vnd.openxmlformats-officedocument.presentationml.presentation.main+xml\"/>\
         <Override PartName=\"/ppt/slideMasters/slideMaster1.xml\" ContentType=\"application/vnd.openxmlformats-officedocument.presentationml.slideMaster+xml\"/>\
         <Override PartName=\"/ppt/slideLayouts/slideLayout1.xml\" ContentType=\"application/vnd.openxmlformats-officedocument.presentationml.slideLayout+xml\"/>\
         <Override PartName=\"/ppt/theme/theme1.xml\" ContentType=\"application/vnd.openxmlformats-officedocument.theme+xml\"/>",
    );
    for n in 1..=slides {
        out.push_str(&format!(
            "<Override PartName=\"/ppt/slides/slide{n}.xml\" ContentType=\"application/vnd.openxmlformats-officedocument.presentationml.slide+xml\"/>"
        ));
    }
    out.push_str(
        "<Override PartName=\"/docProps/core.xml\" ContentType=\"application/vnd.openxmlformats-package.core-properties+xml\"/>\
         <Override PartName=\"/docProps/app.xml\" ContentType=\"application/vnd.openxmlformats-officedocument.extended-properties+xml\"/>\
         </Types>",
    );
    out
}

const PACKAGE_RELS: &str = "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\
    <Relationships xmlns=\"http://schemas.openxmlformats.org/package/2006/relationships\">\
    <Relationship Id=\"rId1\" Type=\"http://schemas.openxmlformats.org/officeDocument/2006/relationships/officeDocument\" Target=\"ppt/presentation.xml\"/>\
    <Relationship Id=\"rId2\" Type=\"http://schemas.openxmlformats.org/package/2006/relationships/metadata/core-properties\" Target=\"docProps/core.xml\"/>\
    <Relationship Id=\"rId3\" Type=\"http://schemas.openxmlformats.org/officeDocument/2006/relationships/extended-properties\" Target=\"docProps/app.xml\"/>\
    </Relationships>";

fn core_xml(meta: &DeckMeta) -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\
         <cp:coreProperties xmlns:cp=\"http://schemas.openxmlformats.org/package/2006/metadata/core-properties\" \
         xmlns:dc=\"http://purl.org/dc/elements/1.1/\" xmlns:dcterms=\"http://purl.org/dc/terms/\" \
         xmlns:xsi=\"http://www.w3.org/2001/XMLSchema-instance\">\
         <dc:title>{}</dc:title><dc:creator>{}</dc:creator>\
         <dcterms:created xsi:type=\"dcterms:W3CDTF\">{DOC_TIMESTAMP}</dcterms:created>\
         <dcterms:modified xsi:type=\"dcterms:W3CDTF\">{DOC_TIMESTAMP}</dcterms:modified>\
         </cp:coreProperties>",
        xml_escape(&meta.title),
        xml_escape(&meta.author),
    )
}

fn app_xml(slides: usize) -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\
         <Properties xmlns=\"http://schemas.openxmlformats.org/officeDocument/2006/extended-properties\" \
         xmlns:vt=\"http://schemas.openxmlformats.org/officeDocument/2006/docPropsVTypes\">\
         <Application>slidesmith</Application><Slides>{slides}</Slides>\
         </Properties>"
    )
}

fn presentation_xml(slides: usize) -> String {
    let mut out = String::from(
        "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\
         <p:presentation xmlns:a=\"http://schemas.openxmlformats.org/drawingml/2006/main\" \
         xmlns:r=\"http://schemas.openxmlformats.org/officeDocument/2006/relationships\" \
         xmlns:p=\"http://schemas.openxmlformats.org/presentationml/2006/main\">\
         <p:sldMasterIdLst><p:sldMasterId id=\"2147483648\" r:id=\"rId1\"/></p:sldMasterIdLst>\
         <p:sldIdLst>",
    );
    for n in 1..=slides {
        // Slide ids start at 256 by convention; rId1 is the master.
        out.push_str(&format!("<p:sldId id=\"{}\" r:id=\"rId{}\"/>", 255 + n, n + 1));
    }
    out.push_str(&format!(
        "</p:sldIdLst>\
         <p:sldSz cx=\"{SLIDE_CX_EMU}\" cy=\"{SLIDE_CY_EMU}\"/>\
         <p:notesSz cx=\"6858000\" cy=\"9144000\"/>\
         </p:presentation>"
    ));
    out
}

fn presentation_rels_xml(slides: usize) -> String {
    let mut out = String::from(
        "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\
         <Relationships xmlns=\"http://schemas.openxmlformats.org/package/2006/relationships\">\
         <Relationship Id=\"rId1\" Type=\"http://schemas.openxmlformats.org/officeDocument/2006/relationships/slideMaster\" Target=\"slideMasters/slideMaster1.xml\"/>",
    );
    for n in 1..=slides {
        out.push_str(&format!(
            "<Relationship Id=\"rId{}\" Type=\"http://schemas.openxmlformats.org/officeDocument/2006/relationships/slide\" Target=\"slides/slide{n}.xml\"/>",
            n + 1
        ));
    }
    out.push_str("</Relationships>");
    out
}

fn slide_rels_xml(part: &SlidePart) -> String {
    let mut out = String::from(
        "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\
         <Relationships xmlns=\"http://schemas.openxmlformats.org/package/2006/relationships\">",
    );
    for rel in &part.rel_entries {
        out.push_str(&format!(
            "<Relationship Id=\"{}\" Type=\"{}\" Target=\"{}\"/>",
            xml_escape(&rel.id),
            xml_escape(&rel.rel_type),
            xml_escape(&rel.target)
        ));
    }
    out.push_str("</Relationships>");
    out
}

const SLIDE_MASTER: &str = concat!(
    "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\
     <p:sldMaster xmlns:a=\"http://schemas.openxmlformats.org/drawingml/2006/main\" \
     xmlns:r=\"http://schemas.openxmlformats.org/officeDocument/2006/relationships\" \
     xmlns:p=\"http://schemas.openxmlformats.org/presentationml/2006/main\">\
     <p:cSld><p:bg><p:bgPr><a:solidFill><a:srgbClr val=\"FFFFFF\"/></a:solidFill>\
     <a:effectLst/></p:bgPr></p:bg>",
    "<p:spTree><p:nvGrpSpPr><p:cNvPr id=\"1\" name=\"\"/>\
     <p:cNvGrpSpPr/><p:nvPr/></p:nvGrpSpPr><p:grpSpPr><a:xfrm><a:off x=\"0\" y=\"0\"/>\
     <a:ext cx=\"0\" cy=\"0\"/><a:chOff x=\"0\" y=\"0\"/><a:chExt cx=\"0\" cy=\"0\"/>\
     </a:xfrm></p:grpSpPr></p:spTree>",
    "</p:cSld>\
     <p:clrMap bg1=\"lt1\" tx1=\"dk1\" bg2=\"lt2\" tx2=\"dk2\" accent1=\"accent1\" \
     accent2=\"accent2\" accent3=\"accent3\" accent4=\"accent4\" accent5=\"accent5\" \
     accent6=\"accent6\" hlink=\"hlink\" folHlink=\"folHlink\"/>\
     <p:sldLayoutIdLst><p:sldLayoutId id=\"2147483649\" r:id=\"rId1\"/></p:sldLayoutIdLst>\
     </p:sldMaster>"
);

const SLIDE_MASTER_RELS: &str = "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\
    <Relationships xmlns=\"http://schemas.openxmlformats.org/package/2006/relationships\">\
    <Relationship Id=\"rId1\" Type=\"http://schemas.openxmlformats.org/officeDocument/2006/relationships/slideLayout\" Target=\"../slideLayouts/slideLayout1.xml\"/>\
    <Relationship Id=\"rId2\" Type=\"http://schemas.openxmlformats.org/officeDocument/2006/relationships/theme\" Target=\"../theme/theme1.xml\"/>\
    </Relationships>";

const SLIDE_LAYOUT: &str = concat!(
    "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\
     <p:sldLayout xmlns:a=\"http://schemas.openxmlformats.org/drawingml/2006/main\" \
     xmlns:r=\"http://schemas.openxmlformats.org/officeDocument/2006/relationships\" \
     xmlns:p=\"http://schemas.openxmlformats.org/presentationml/2006/main\" type=\"blank\">\
     <p:cSld name=\"Blank\">",
    "<p:spTree><p:nvGrpSpPr><p:cNvPr id=\"1\" name=\"\"/>\
     <p:cNvGrpSpPr/><p:nvPr/></p:nvGrpSpPr><p:grpSpPr><a:xfrm><a:off x=\"0\" y=\"0\"/>\
     <a:ext cx=\"0\" cy=\"0\"/><a:chOff x=\"0\" y=\"0\"/><a:chExt cx=\"0\" cy=\"0\"/>\
     </a:xfrm></p:grpSpPr></p:spTree>",
    "</p:cSld><p:clrMapOvr><a:masterClrMapping/></p:clrMapOvr></p:sldLayout>"
);

const SLIDE_LAYOUT_RELS: &str = "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\
    <Relationships xmlns=\"http://schemas.openxmlformats.org/package/2006/relationships\">\
    <Relationship Id=\"rId1\" Type=\"http://schemas.openxmlformats.org/officeDocument/2006/relationships/slideMaster\" Target=\"../slideMasters/slideMaster1.xml\"/>\
    </Relationships>";

/// Minimal complete theme: one color scheme, one font scheme, and the three
/// mandatory entries in each format-scheme list.
const THEME: &str = concat!(
    "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\
     <a:theme xmlns:a=\"http://schemas.openxmlformats.org/drawingml/2006/main\" name=\"slidesmith\">\
     <a:themeElements>\
     <a:clrScheme name=\"slidesmith\">\
     <a:dk1><a:srgbClr val=\"000000\"/></a:dk1><a:lt1><a:srgbClr val=\"FFFFFF\"/></a:lt1>\
     <a:dk2><a:srgbClr val=\"1F4E79\"/></a:dk2><a:lt2><a:srgbClr val=\"F5F6F8\"/></a:lt2>\
     <a:accent1><a:srgbClr val=\"2E75B6\"/></a:accent1><a:accent2><a:srgbClr val=\"F2B705\"/></a:accent2>\
     <a:accent3><a:srgbClr val=\"6AA84F\"/></a:accent3><a:accent4><a:srgbClr val=\"A64D79\"/></a:accent4>\
     <a:accent5><a:srgbClr val=\"45818E\"/></a:accent5><a:accent6><a:srgbClr val=\"E06666\"/></a:accent6>\
     <a:hlink><a:srgbClr val=\"0563C1\"/></a:hlink><a:folHlink><a:srgbClr val=\"954F72\"/></a:folHlink>\
     </a:clrScheme>",
    "<a:fontScheme name=\"slidesmith\">\
     <a:majorFont><a:latin typeface=\"Calibri\"/><a:ea typeface=\"\"/><a:cs typeface=\"\"/></a:majorFont>\
     <a:minorFont><a:latin typeface=\"Calibri\"/><a:ea typeface=\"\"/><a:cs typeface=\"\"/></a:minorFont>\
     </a:fontScheme>",
    "<a:fmtScheme name=\"slidesmith\">\
     <a:fillStyleLst>\
     <a:solidFill><a:schemeClr val=\"phClr\"/></a:solidFill>\
     <a:solidFill><a:schemeClr val=\"phClr\"/></a:solidFill>\
     <a:solidFill><a:schemeClr val=\"phClr\"/></a:solidFill>\
     </a:fillStyleLst>\
     <a:lnStyleLst>\
     <a:ln w=\"6350\"><a:solidFill><a:schemeClr val=\"phClr\"/></a:solidFill></a:ln>\
     <a:ln w=\"12700\"><a:solidFill><a:schemeClr val=\"phClr\"/></a:solidFill></a:ln>\
     <a:ln w=\"19050\"><a:solidFill><a:schemeClr val=\"phClr\"/></a:solidFill></a:ln>\
     </a:lnStyleLst>\
     <a:effectStyleLst>\
     <a:effectStyle><a:effectLst/></a:effectStyle>\
     <a:effectStyle><a:effectLst/></a:effectStyle>\
     <a:effectStyle><a:effectLst/></a:effectStyle>\
     </a:effectStyleLst>\
     <a:bgFillStyleLst>\
     <a:solidFill><a:schemeClr val=\"phClr\"/></a:solidFill>\
     <a:solidFill><a:schemeClr val=\"phClr\"/></a:solidFill>\
     <a:solidFill><a:schemeClr val=\"phClr\"/></a:solidFill>\
     </a:bgFillStyleLst>\
     </a:fmtScheme>\
     </a:themeElements><a:objectDefaults/><a:extraClrSchemeLst/></a:theme>"
);

// --- read-back oracle ---

/// One layout block recovered from a slide, in EMU exactly as written.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecoveredBlock {
    pub id: String,
    pub role: String,
    pub x_emu: i64,
    pub y_emu: i64,
    pub w_emu: i64,
    pub h_emu: i64,
}

/// Geometry of one slide, in deck order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PageGeometry {
    pub slide_path: String,
    pub blocks: Vec<RecoveredBlock>,
}

/// Full read-back result; `warnings` lists parts or shapes that were
/// skipped rather than understood (foreign OOXML features).
#[derive(Debug, Clone)]
pub struct ReadBack {
    pub pages: Vec<PageGeometry>,
    pub warnings: Vec<String>,
}

fn open_zip(bytes: &[u8]) -> Result<ZipArchive<Cursor<&[u8]>>, ArchiveError> {
    ZipArchive::new(Cursor::new(bytes)).map_err(|e| ArchiveError::CorruptArchive(e.to_string()))
}

fn read_part(zip: &mut ZipArchive<Cursor<&[u8]>>, name: &str) -> Result<String, ArchiveError> {
    let mut file = match zip.by_name(name) {
        Ok(f) => f,
        Err(zip::result::ZipError::FileNotFound) => {
            return Err(ArchiveError::MissingPart(name.to_string()))
        }
        Err(e) => return Err(ArchiveError::CorruptArchive(e.to_string())),
    };
    let mut text = String::new();
    file.read_to_string(&mut text).map_err(|e| ArchiveError::CorruptArchive(e.to_string()))?;
    Ok(text)
}

fn attr_local<'a>(node: roxmltree::Node<'a, '_>, name: &str) -> Option<&'a str> {
    node.attributes().find(|a| a.name() == name).map(|a| a.value())
}

/// Recover every slide's block geometry. Slides are visited in
/// presentation.xml order; shapes without a `blk:` name are ignored;
/// unknown parts and unreadable shapes are reported, not fatal.
pub fn read_back(bytes: &[u8]) -> Result<ReadBack, ArchiveError> {
    let mut zip = open_zip(bytes)?;
    let mut warnings = Vec::new();

    // Slide order: presentation.xml sldIdLst joined to its rels targets.
    let pres = read_part(&mut zip, "ppt/presentation.xml")?;
    let rels = read_part(&mut zip, "ppt/_rels/presentation.xml.rels")?;

    let rels_doc = roxmltree::Document::parse(&rels)
        .map_err(|e| ArchiveError::CorruptArchive(format!("presentation rels: {e}")))?;
    let mut targets: Vec<(String, String)> = Vec::new(); // (rel id, target)
    for rel in rels_doc.descendants().filter(|n| n.tag_name().name() == "Relationship") {
        if let (Some(id), Some(target)) = (attr_local(rel, "Id"), attr_local(rel, "Target")) {
            targets.push((id.to_string(), target.to_string()));
        }
    }

    let pres_doc = roxmltree::Document::parse(&pres)
        .map_err(|e| ArchiveError::CorruptArchive(format!("presentation.xml: {e}")))?;
    let mut slide_paths: Vec<String> = Vec::new();
    for sld in pres_doc.descendants().filter(|n| n.tag_name().name() == "sldId") {
        // The slide pointer is the namespaced r:id, not the plain id.
        let Some(rid) = sld.attributes().find(|a| a.name() == "id" && a.namespace().is_some())
        else {
            warnings.push(String::from("sldId without r:id attribute"));
            continue;
        };
        match targets.iter().find(|(id, _)| id == rid.value()) {
            Some((_, target)) => slide_paths.push(format!("ppt/{target}")),
            None => warnings.push(format!("sldId references unknown rel {}", rid.value())),
        }
    }
    if slide_paths.is_empty() {
        return Err(ArchiveError::MissingPart(String::from("ppt/slides/slide1.xml")));
    }

    let mut pages = Vec::new();
    for path in &slide_paths {
        let xml = read_part(&mut zip, path)?;
        let doc = roxmltree::Document::parse(&xml)
            .map_err(|e| ArchiveError::CorruptArchive(format!("{path}: {e}")))?;
        let mut blocks = Vec::new();
        for sp in doc.descendants().filter(|n| n.tag_name().name() == "sp") {
            let Some(name) =
                sp.descendants().find(|n| n.tag_name().name() == "cNvPr").and_then(|n| attr_local(n, "name"))
            else {
                warnings.push(format!("{path}: shape without a name"));
                continue;
            };
            let mut fields = name.splitn(3, ':');
            if fields.next() != Some("blk") {
                continue; // background, image, or text shape
            }
            let (Some(role), Some(id)) = (fields.next(), fields.next()) else {
                warnings.push(format!("{path}: malformed block name {name:?}"));
                continue;
            };
            let off = sp.descendants().find(|n| n.tag_name().name() == "off");
            let ext = sp.descendants().find(|n| n.tag_name().name() == "ext");
            let (Some(off), Some(ext)) = (off, ext) else {
                warnings.push(format!("{path}: block {name:?} lacks a transform"));
                continue;
            };
            let coord = |node: roxmltree::Node, attr: &str| -> Option<i64> {
                attr_local(node, attr).and_then(|v| v.parse().ok())
            };
            let geometry = (
                coord(off, "x"),
                coord(off, "y"),
                coord(ext, "cx"),
                coord(ext, "cy"),
            );
            let (Some(x), Some(y), Some(cx), Some(cy)) = geometry else {
                warnings.push(format!("{path}: block {name:?} has non-numeric geometry"));
                continue;
            };
            blocks.push(RecoveredBlock {
                id: id.to_string(),
                role: role.to_string(),
                x_emu: x,
                y_emu: y,
                w_emu: cx,
                h_emu: cy,
            });
        }
        pages.push(PageGeometry { slide_path: path.clone(), blocks });
    }

    // Foreign parts: everything outside the fixed layout of this writer.
    let entry_names: Vec<String> = (0..zip.len())
        .filter_map(|i| zip.by_index(i).ok().map(|f| f.name().to_string()))
        .collect();
    for name in entry_names {
        if !is_known_part(&name) {
            warnings.push(format!("unsupported part: {name}"));
        }
    }

    Ok(ReadBack { pages, warnings })
}

fn is_known_part(name: &str) -> bool {
    const FIXED: &[&str] = &[
        "[Content_Types].xml",
        "_rels/.rels",
        "docProps/app.xml",
        "docProps/core.xml",
        "ppt/presentation.xml",
        "ppt/_rels/presentation.xml.rels",
        "ppt/slideMasters/slideMaster1.xml",
        "ppt/slideMasters/_rels/slideMaster1.xml.rels",
        "ppt/slideLayouts/slideLayout1.xml",
        "ppt/slideLayouts/_rels/slideLayout1.xml.rels",
        "ppt/theme/theme1.xml",
    ];
    FIXED.contains(&name)
        || name.starts_with("ppt/slides/")
        || name.starts_with("ppt/media/")
}
