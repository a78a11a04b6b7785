//! Names that the bundled targets treat specially in their deep stage.
//! Real-world documents use these heavily, so the mock generator draws
//! from the same lists.

pub const XML_TAGS: [&str; 40] = [
    "doc", "clean", "dirty", "mixed", "books", "book", "title", "author", "genre", "price",
    "year", "catalog", "item", "name", "description", "note", "to", "from", "heading", "body",
    "library", "person", "address", "city", "country", "email", "phone", "root", "data", "record",
    "id", "value", "list", "entry", "config", "setting", "user", "message", "date", "status",
];

pub const XML_ATTRS: [&str; 16] = [
    "id", "name", "type", "lang", "version", "class", "href", "src", "category", "value", "ref",
    "key", "encoding", "date", "status", "count",
];

pub const JSON_KEYS: [&str; 40] = [
    "name", "id", "age", "email", "address", "city", "zip", "phone", "items", "price",
    "quantity", "title", "author", "tags", "active", "created_at", "updated_at", "version", "type", "value",
    "data", "user", "users", "config", "settings", "enabled", "count", "total", "description", "url",
    "status", "message", "error", "code", "results", "list", "key", "children", "parent", "meta",
];

pub const SCRIPT_IDENTS: [&str; 30] = [
    "x", "y", "i", "j", "n", "count", "total", "sum", "result", "value", "items", "list", "name",
    "index", "acc", "tmp", "flag", "max", "min", "data", "key", "left", "right", "mid", "node",
    "fib", "fact", "add", "square", "main",
];

/// Functions the script target's analyzer knows about.
pub const SCRIPT_BUILTINS: [&str; 10] = [
    "len", "push", "pop", "str", "int", "abs", "min", "max", "keys", "range",
];

pub const FILE_EXTENSIONS: [&str; 14] = [
    "txt", "bin", "iso", "tar", "gz", "zip", "c", "h", "rs", "py", "md", "json", "xml", "log",
];
