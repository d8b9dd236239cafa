#include "nnv/Error.h"
#include "nnv/Format.h"
#include "nnv/Proof.h"

#include <istream>
#include <ostream>
#include <sstream>

// Line format, depth-first pre-order:
//   node <k> (<constraint> <case>){k}
//   lemma <constraint> <rule> <var> <l|u> <value> premise <var> <l|u> <value> ray: <k> (<eq> <coeff>){k}
//   leaf ray: <k> (<eq> <coeff>){k}
// A node line is followed by its lemma lines, then either a leaf line (k = 0)
// or its k children.

namespace nnv {

namespace {

const char *const kRuleNames[] = { "ROW", "R1", "R2", "R3", "R4", "MAXU", "MAXL" };

void writeRay( std::ostream &out, const SparseRay &ray )
{
    out << "ray: " << ray.size();
    for ( const auto &[index, multiplier] : ray )
        out << ' ' << index << ' ' << formatDouble( multiplier );
}

void writeNode( std::ostream &out, const ProofNode &node )
{
    out << "node " << node.children.size();
    for ( const ProofNode &child : node.children )
    {
        SplitLabel label = child.split.value_or( SplitLabel{} );
        out << ' ' << label.constraintId << ' ' << label.caseIndex;
    }
    out << '\n';
    for ( const Lemma &lemma : node.lemmas )
    {
        out << "lemma " << lemma.constraintId << ' ' << ruleName( lemma.rule ) << ' '
            << lemma.conclusion.variable << ' ' << sideName( lemma.conclusion.side ) << ' '
            << formatDouble( lemma.conclusion.value ) << " premise " << lemma.premise.variable << ' '
            << sideName( lemma.premise.side ) << ' ' << formatDouble( lemma.premise.value ) << ' ';
        writeRay( out, lemma.premise.ray );
        out << '\n';
    }
    if ( node.children.empty() )
    {
        out << "leaf ";
        writeRay( out, node.contradiction.value_or( SparseRay{} ) );
        out << '\n';
    }
    for ( const ProofNode &child : node.children )
        writeNode( out, child );
}

class Reader
{
public:
    explicit Reader( std::istream &in )
    {
        std::string line;
        unsigned number = 0;
        while ( std::getline( in, line ) )
        {
            ++number;
            auto tokens = splitWhitespace( line );
            if ( tokens.empty() || tokens[0][0] == '#' )
                continue;
            std::vector<std::string> owned( tokens.begin(), tokens.end() );
            _lines.push_back( { number, std::move( owned ) } );
        }
    }

    ProofNode readTree()
    {
        ProofNode root = readNode( std::nullopt );
        if ( _next < _lines.size() )
            throw ParseError( "trailing content after proof tree", _lines[_next].number );
        return root;
    }

private:
    struct Line
    {
        unsigned number;
        std::vector<std::string> tokens;
    };

    const Line &take()
    {
        if ( _next >= _lines.size() )
            throw ParseError( "unexpected end of proof", _lines.empty() ? 0 : _lines.back().number );
        _current = &_lines[_next++];
        return *_current;
    }

    bool peekIs( const char *word ) const
    {
        return _next < _lines.size() && _lines[_next].tokens[0] == word;
    }

    const std::string &token( size_t &pos )
    {
        if ( pos >= _current->tokens.size() )
            throw ParseError( "unexpected end of line", _current->number );
        return _current->tokens[pos++];
    }

    unsigned readUnsigned( size_t &pos )
    {
        auto value = parseUnsigned( token( pos ) );
        if ( !value )
            throw ParseError( "expected a non-negative integer", _current->number );
        return *value;
    }

    int readInt( size_t &pos )
    {
        const std::string &text = token( pos );
        if ( text == "-1" )
            return -1;
        auto value = parseUnsigned( text );
        if ( !value )
            throw ParseError( "expected an integer", _current->number );
        return static_cast<int>( *value );
    }

    double readDouble( size_t &pos )
    {
        auto value = parseDouble( token( pos ) );
        if ( !value )
            throw ParseError( "expected a number", _current->number );
        return *value;
    }

    Side readSide( size_t &pos )
    {
        const std::string &text = token( pos );
        if ( text == "l" )
            return Side::Lower;
        if ( text == "u" )
            return Side::Upper;
        throw ParseError( "expected bound side l or u", _current->number );
    }

    void expect( size_t &pos, const char *word )
    {
        if ( token( pos ) != word )
            throw ParseError( std::string( "expected '" ) + word + "'", _current->number );
    }

    void expectEnd( size_t pos )
    {
        if ( pos != _current->tokens.size() )
            throw ParseError( "trailing tokens", _current->number );
    }

    SparseRay readRay( size_t &pos )
    {
        expect( pos, "ray:" );
        unsigned count = readUnsigned( pos );
        SparseRay ray;
        for ( unsigned i = 0; i < count; ++i )
        {
            unsigned index = readUnsigned( pos );
            ray.emplace_back( index, readDouble( pos ) );
        }
        expectEnd( pos );
        return ray;
    }

    ProofNode readNode( std::optional<SplitLabel> label )
    {
        take();
        if ( _current->tokens[0] != "node" )
            throw ParseError( "expected 'node'", _current->number );

        ProofNode node;
        node.split = label;
        size_t pos = 1;
        unsigned count = readUnsigned( pos );
        std::vector<SplitLabel> labels;
        for ( unsigned i = 0; i < count; ++i )
        {
            unsigned constraint = readUnsigned( pos );
            labels.push_back( { constraint, readUnsigned( pos ) } );
        }
        expectEnd( pos );

        while ( peekIs( "lemma" ) )
        {
            take();
            node.lemmas.push_back( readLemma() );
        }

        if ( count == 0 )
        {
            take();
            if ( _current->tokens[0] != "leaf" )
                throw ParseError( "expected 'leaf' after a node without children", _current->number );
            size_t p = 1;
            node.contradiction = readRay( p );
            return node;
        }

        for ( const SplitLabel &childLabel : labels )
            node.children.push_back( readNode( childLabel ) );
        return node;
    }

    Lemma readLemma()
    {
        Lemma lemma;
        size_t pos = 1;
        lemma.constraintId = readInt( pos );
        auto rule = parseRule( token( pos ) );
        if ( !rule )
            throw ParseError( "unknown lemma rule", _current->number );
        lemma.rule = *rule;
        lemma.conclusion.variable = readUnsigned( pos );
        lemma.conclusion.side = readSide( pos );
        lemma.conclusion.value = readDouble( pos );
        expect( pos, "premise" );
        lemma.premise.variable = readUnsigned( pos );
        lemma.premise.side = readSide( pos );
        lemma.premise.value = readDouble( pos );
        lemma.premise.ray = readRay( pos );
        return lemma;
    }

    std::vector<Line> _lines;
    size_t _next = 0;
    const Line *_current = nullptr;
};

} // namespace

const char *ruleName( LemmaRule rule )
{
    return kRuleNames[static_cast<int>( rule )];
}

std::optional<LemmaRule> parseRule( const std::string &name )
{
    for ( int i = 0; i < 7; ++i )
        if ( name == kRuleNames[i] )
            return static_cast<LemmaRule>( i );
    return std::nullopt;
}

void writeProof( std::ostream &out, const ProofNode &root )
{
    writeNode( out, root );
}

std::string writeProof( const ProofNode &root )
{
    std::ostringstream out;
    writeNode( out, root );
    return out.str();
}

ProofNode parseProof( std::istream &in )
{
    return Reader( in ).readTree();
}

ProofNode parseProof( const std::string &text )
{
    std::istringstream in( text );
    return parseProof( in );
}

} // namespace nnv
