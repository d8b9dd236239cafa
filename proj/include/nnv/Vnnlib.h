#pragma once

#include "nnv/Query.h"

#include <span>
#include <string>
#include <vector>

namespace nnv {

// Symbol of a property: input X_i or output Y_i.
struct VnnlibSymbol
{
    bool output = false;
    unsigned index = 0;
    bool operator==( const VnnlibSymbol & ) const = default;
};

// sum coefficient * symbol + constant  (<= | >=)  0
struct VnnlibAtom
{
    std::vector<std::pair<VnnlibSymbol, double>> terms;
    double constant = 0;
    Relation relation = Relation::Le;
};

struct VnnlibFormula
{
    enum class Kind { Atom, And, Or };
    Kind kind = Kind::And;
    VnnlibAtom atom;
    std::vector<VnnlibFormula> children;
};

// Conjunction of all top-level asserts.
struct VnnlibProperty
{
    VnnlibFormula formula;
    unsigned numInputs = 0;
    unsigned numOutputs = 0;
};

// Strict < and > are read as <= and >=. Throws ParseError on malformed text or
// undeclared / out-of-range symbols, UnsupportedError on disjunctions nested
// below a disjunct.
VnnlibProperty parseVnnlib( const std::string &text, unsigned numInputs, unsigned numOutputs );

// Adds the property to a query whose inputVariables/outputVariables are set.
// Single-symbol input atoms become bounds, other atoms inequalities. Each
// top-level disjunction becomes one Disjunction constraint; multi-symbol atoms
// inside it get a slack s = rhs - lhs (unbounded) and the disjunct stores s >= 0.
void applyProperty( Query &query, const VnnlibProperty &property );

// Evaluates the formula on concrete input and output values.
bool holds( const VnnlibProperty &property,
            std::span<const double> inputs,
            std::span<const double> outputs,
            double tolerance = tolerance::kFeasibility );

} // namespace nnv
