#pragma once
// Umbrella for the .twin model-description language: parser, canonical
// printer and document compiler.

#include "twinkernel/ast.hpp"
#include "twinkernel/compile.hpp"
#include "twinkernel/parser.hpp"
#include "twinkernel/printer.hpp"

namespace twinkernel {

using dsl::parse_model;
using dsl::canonical_print;
using dsl::Document;
using dsl::ParseResult;

// Parse + compile, i.e. the full validation pipeline for one document.
inline CompileResult validate_document(const dsl::Document& doc) { return compile_document(doc); }

}  // namespace twinkernel
