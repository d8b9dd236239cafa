#include "nnv/Vnnlib.h"

#include "nnv/Error.h"
#include "nnv/Format.h"

#include <cctype>
#include <map>
#include <tuple>

namespace nnv {

namespace {

struct SExpr
{
    std::string atom;
    std::vector<SExpr> list;
    bool isList = false;
    unsigned line = 0;
};

class SExprReader
{
public:
    explicit SExprReader( const std::string &text )
        : _text( text )
    {
    }

    bool atEnd()
    {
        skipSpace();
        return _pos >= _text.size();
    }

    SExpr read()
    {
        skipSpace();
        if ( _pos >= _text.size() )
            throw ParseError( "unexpected end of input", _line );
        SExpr e;
        e.line = _line;
        char c = _text[_pos];
        if ( c == ')' )
            throw ParseError( "unbalanced ')'", _line );
        if ( c == '(' )
        {
            ++_pos;
            e.isList = true;
            while ( true )
            {
                skipSpace();
                if ( _pos >= _text.size() )
                    throw ParseError( "missing ')'", e.line );
                if ( _text[_pos] == ')' )
                {
                    ++_pos;
                    return e;
                }
                e.list.push_back( read() );
            }
        }
        size_t start = _pos;
        while ( _pos < _text.size() && !std::isspace( static_cast<unsigned char>( _text[_pos] ) ) &&
                _text[_pos] != '(' && _text[_pos] != ')' && _text[_pos] != ';' )
            ++_pos;
        e.atom = _text.substr( start, _pos - start );
        return e;
    }

private:
    void skipSpace()
    {
        while ( _pos < _text.size() )
        {
            char c = _text[_pos];
            if ( c == ';' )
            {
                while ( _pos < _text.size() && _text[_pos] != '\n' )
                    ++_pos;
            }
            else if ( std::isspace( static_cast<unsigned char>( c ) ) )
            {
                if ( c == '\n' )
                    ++_line;
                ++_pos;
            }
            else
                return;
        }
    }

    const std::string &_text;
    size_t _pos = 0;
    unsigned _line = 1;
};

struct Linear
{
    std::map<std::pair<bool, unsigned>, double> terms;
    double constant = 0;

    bool isConstant() const
    {
        for ( const auto &[symbol, c] : terms )
            if ( c != 0 )
                return false;
        return true;
    }

    void add( const Linear &other, double scale )
    {
        for ( const auto &[symbol, c] : other.terms )
            terms[symbol] += scale * c;
        constant += scale * other.constant;
    }
};

class PropertyParser
{
public:
    PropertyParser( unsigned numInputs, unsigned numOutputs )
        : _numInputs( numInputs )
        , _numOutputs( numOutputs )
    {
    }

    VnnlibProperty parse( const std::string &text )
    {
        VnnlibProperty property;
        property.numInputs = _numInputs;
        property.numOutputs = _numOutputs;
        property.formula.kind = VnnlibFormula::Kind::And;

        SExprReader reader( text );
        while ( !reader.atEnd() )
        {
            SExpr command = reader.read();
            if ( !command.isList || command.list.empty() || command.list[0].isList )
                throw ParseError( "expected a command", command.line );
            const std::string &head = command.list[0].atom;
            if ( head == "declare-const" )
                declare( command );
            else if ( head == "assert" )
            {
                if ( command.list.size() != 2 )
                    throw ParseError( "assert takes one formula", command.line );
                property.formula.children.push_back( formula( command.list[1] ) );
            }
            else if ( head == "set-logic" || head == "check-sat" || head == "get-model" || head == "exit" )
                continue;
            else
                throw ParseError( "unsupported command '" + head + "'", command.line );
        }
        return property;
    }

private:
    void declare( const SExpr &command )
    {
        if ( command.list.size() != 3 || command.list[1].isList || command.list[2].atom != "Real" )
            throw ParseError( "expected (declare-const <name> Real)", command.line );
        auto symbol = symbolOf( command.list[1].atom, command.line );
        if ( !symbol )
            throw ParseError( "declared symbol '" + command.list[1].atom + "' is not X_i or Y_i", command.line );
        _declared[command.list[1].atom] = *symbol;
    }

    std::optional<VnnlibSymbol> symbolOf( const std::string &name, unsigned line ) const
    {
        if ( name.size() < 3 || ( name[0] != 'X' && name[0] != 'Y' ) || name[1] != '_' )
            return std::nullopt;
        auto index = parseUnsigned( std::string_view( name ).substr( 2 ) );
        if ( !index )
            return std::nullopt;
        bool output = name[0] == 'Y';
        unsigned limit = output ? _numOutputs : _numInputs;
        if ( *index >= limit )
            throw ParseError( "symbol " + name + " exceeds the network's " +
                                  ( output ? "output" : "input" ) + " count " + std::to_string( limit ),
                              line );
        return VnnlibSymbol{ output, *index };
    }

    Linear term( const SExpr &e )
    {
        Linear result;
        if ( !e.isList )
        {
            if ( auto value = parseDouble( e.atom ) )
            {
                result.constant = *value;
                return result;
            }
            auto it = _declared.find( e.atom );
            if ( it == _declared.end() )
                throw ParseError( "undeclared symbol '" + e.atom + "'", e.line );
            result.terms[{ it->second.output, it->second.index }] = 1;
            return result;
        }
        if ( e.list.size() < 2 || e.list[0].isList )
            throw ParseError( "malformed term", e.line );
        const std::string &op = e.list[0].atom;
        if ( op == "+" )
        {
            for ( size_t i = 1; i < e.list.size(); ++i )
                result.add( term( e.list[i] ), 1 );
        }
        else if ( op == "-" )
        {
            if ( e.list.size() == 2 )
                result.add( term( e.list[1] ), -1 );
            else
            {
                result.add( term( e.list[1] ), 1 );
                for ( size_t i = 2; i < e.list.size(); ++i )
                    result.add( term( e.list[i] ), -1 );
            }
        }
        else if ( op == "*" )
        {
            result.constant = 1;
            for ( size_t i = 1; i < e.list.size(); ++i )
            {
                Linear factor = term( e.list[i] );
                if ( factor.isConstant() )
                {
                    for ( auto &[symbol, c] : result.terms )
                        c *= factor.constant;
                    result.constant *= factor.constant;
                }
                else if ( result.isConstant() )
                {
                    double scale = result.constant;
                    result = Linear();
                    result.add( factor, scale );
                }
                else
                    throw UnsupportedError( "line " + std::to_string( e.line ) + ": nonlinear product" );
            }
        }
        else
            throw ParseError( "unsupported term operator '" + op + "'", e.line );
        return result;
    }

    VnnlibFormula formula( const SExpr &e )
    {
        if ( !e.isList || e.list.empty() || e.list[0].isList )
            throw ParseError( "expected a formula", e.line );
        const std::string &op = e.list[0].atom;
        VnnlibFormula f;
        if ( op == "and" || op == "or" )
        {
            if ( e.list.size() < 2 )
                throw ParseError( "'" + op + "' needs at least one operand", e.line );
            f.kind = op == "and" ? VnnlibFormula::Kind::And : VnnlibFormula::Kind::Or;
            for ( size_t i = 1; i < e.list.size(); ++i )
                f.children.push_back( formula( e.list[i] ) );
            return f;
        }
        bool le = op == "<=" || op == "<";
        bool ge = op == ">=" || op == ">";
        if ( !le && !ge )
            throw ParseError( "unsupported formula operator '" + op + "'", e.line );
        if ( e.list.size() != 3 )
            throw ParseError( "comparison takes two terms", e.line );
        Linear difference = term( e.list[1] );
        difference.add( term( e.list[2] ), -1 );
        f.kind = VnnlibFormula::Kind::Atom;
        f.atom.relation = le ? Relation::Le : Relation::Ge;
        f.atom.constant = difference.constant;
        for ( const auto &[symbol, c] : difference.terms )
            if ( c != 0 )
                f.atom.terms.push_back( { VnnlibSymbol{ symbol.first, symbol.second }, c } );
        return f;
    }

    unsigned _numInputs;
    unsigned _numOutputs;
    std::map<std::string, VnnlibSymbol> _declared;
};

double evaluateAtom( const VnnlibAtom &atom, std::span<const double> inputs, std::span<const double> outputs )
{
    double value = atom.constant;
    for ( const auto &[symbol, c] : atom.terms )
        value += c * ( symbol.output ? outputs[symbol.index] : inputs[symbol.index] );
    return value;
}

bool constantHolds( const VnnlibAtom &atom )
{
    return atom.relation == Relation::Le ? atom.constant <= 0 : atom.constant >= 0;
}

class PropertyBuilder
{
public:
    explicit PropertyBuilder( Query &query )
        : _query( query )
    {
    }

    void conjunct( const VnnlibFormula &f )
    {
        switch ( f.kind )
        {
        case VnnlibFormula::Kind::And:
            for ( const VnnlibFormula &child : f.children )
                conjunct( child );
            return;
        case VnnlibFormula::Kind::Or:
            if ( f.children.size() == 1 )
                conjunct( f.children[0] );
            else
                disjunction( f );
            return;
        case VnnlibFormula::Kind::Atom:
            atom( f.atom );
            return;
        }
    }

private:
    VariableId variableOf( const VnnlibSymbol &symbol ) const
    {
        const auto &variables = symbol.output ? _query.outputVariables : _query.inputVariables;
        if ( symbol.index >= variables.size() )
            throw UsageError( "property symbol exceeds the query's declared inputs/outputs" );
        return variables[symbol.index];
    }

    // Bound implied by c * x + k (<= | >=) 0.
    static std::pair<Side, double> boundOf( const VnnlibAtom &a )
    {
        double c = a.terms[0].second;
        bool upper = ( a.relation == Relation::Le ) == ( c > 0 );
        return { upper ? Side::Upper : Side::Lower, -a.constant / c };
    }

    void atom( const VnnlibAtom &a )
    {
        if ( a.terms.empty() )
        {
            if ( !constantHolds( a ) )
                throw UnsupportedError( "property contains a constant comparison that is always false" );
            return;
        }
        if ( a.terms.size() == 1 && !a.terms[0].first.output )
        {
            VariableId v = variableOf( a.terms[0].first );
            auto [side, value] = boundOf( a );
            if ( side == Side::Upper && value < _query.bounds.upper( v ) )
                _query.bounds.setUpper( v, value );
            if ( side == Side::Lower && value > _query.bounds.lower( v ) )
                _query.bounds.setLower( v, value );
            return;
        }
        Equation e;
        for ( const auto &[symbol, c] : a.terms )
            e.addTerm( variableOf( symbol ), c );
        e.relation = a.relation;
        e.rhs = -a.constant;
        _query.addEquation( std::move( e ) );
    }

    void collectAtoms( const VnnlibFormula &f, std::vector<const VnnlibAtom *> &atoms )
    {
        if ( f.kind == VnnlibFormula::Kind::Atom )
            atoms.push_back( &f.atom );
        else if ( f.kind == VnnlibFormula::Kind::And ||
                  ( f.kind == VnnlibFormula::Kind::Or && f.children.size() == 1 ) )
            for ( const VnnlibFormula &child : f.children )
                collectAtoms( child, atoms );
        else
            throw UnsupportedError( "disjunction nested inside a disjunct" );
    }

    void disjunction( const VnnlibFormula &f )
    {
        std::vector<Disjunct> disjuncts;
        for ( const VnnlibFormula &child : f.children )
        {
            std::vector<const VnnlibAtom *> atoms;
            collectAtoms( child, atoms );
            std::map<VariableId, DisjunctBound> bounds;
            bool possible = true;
            for ( const VnnlibAtom *a : atoms )
            {
                if ( a->terms.empty() )
                {
                    possible = possible && constantHolds( *a );
                    continue;
                }
                VariableId v;
                Side side;
                double value;
                if ( a->terms.size() == 1 )
                {
                    v = variableOf( a->terms[0].first );
                    std::tie( side, value ) = boundOf( *a );
                }
                else
                {
                    v = slackFor( *a );
                    side = Side::Lower;
                    value = 0;
                }
                DisjunctBound &bound = bounds.try_emplace( v, DisjunctBound{ v } ).first->second;
                if ( side == Side::Upper )
                    bound.upper = std::min( bound.upper, value );
                else
                    bound.lower = std::max( bound.lower, value );
            }
            if ( !possible )
                continue;
            Disjunct disjunct;
            for ( const auto &[v, bound] : bounds )
                disjunct.push_back( bound );
            disjuncts.push_back( std::move( disjunct ) );
        }
        if ( disjuncts.empty() )
            throw UnsupportedError( "every disjunct of the property is a false constant comparison" );
        _query.addConstraint( PLConstraint::disjunction( std::move( disjuncts ) ) );
    }

    // s = -(sum c x + k) for <=, s = sum c x + k for >=; the atom holds iff s >= 0.
    VariableId slackFor( const VnnlibAtom &a )
    {
        VariableId s = _query.addVariable();
        double sign = a.relation == Relation::Le ? 1.0 : -1.0;
        Equation e;
        e.addTerm( s, 1 );
        for ( const auto &[symbol, c] : a.terms )
            e.addTerm( variableOf( symbol ), sign * c );
        e.rhs = -sign * a.constant;
        _query.addEquation( std::move( e ) );
        return s;
    }

    Query &_query;
};

bool holdsFormula( const VnnlibFormula &f,
                   std::span<const double> inputs,
                   std::span<const double> outputs,
                   double tolerance )
{
    switch ( f.kind )
    {
    case VnnlibFormula::Kind::Atom:
    {
        double value = evaluateAtom( f.atom, inputs, outputs );
        return f.atom.relation == Relation::Le ? value <= tolerance : value >= -tolerance;
    }
    case VnnlibFormula::Kind::And:
        for ( const VnnlibFormula &child : f.children )
            if ( !holdsFormula( child, inputs, outputs, tolerance ) )
                return false;
        return true;
    case VnnlibFormula::Kind::Or:
        for ( const VnnlibFormula &child : f.children )
            if ( holdsFormula( child, inputs, outputs, tolerance ) )
                return true;
        return false;
    }
    return false;
}

} // namespace

VnnlibProperty parseVnnlib( const std::string &text, unsigned numInputs, unsigned numOutputs )
{
    return PropertyParser( numInputs, numOutputs ).parse( text );
}

void applyProperty( Query &query, const VnnlibProperty &property )
{
    PropertyBuilder( query ).conjunct( property.formula );
}

bool holds( const VnnlibProperty &property,
            std::span<const double> inputs,
            std::span<const double> outputs,
            double tolerance )
{
    return holdsFormula( property.formula, inputs, outputs, tolerance );
}

} // namespace nnv
