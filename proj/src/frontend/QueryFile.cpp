#include "nnv/QueryFile.h"

#include "nnv/Error.h"
#include "nnv/Format.h"
#include "nnv/NNet.h"

#include <ostream>
#include <sstream>

namespace nnv {

namespace {

const char *relationToken( Relation relation )
{
    switch ( relation )
    {
    case Relation::Eq:
        return "=";
    case Relation::Le:
        return "<=";
    case Relation::Ge:
        return ">=";
    }
    return "=";
}

void writeList( std::ostream &out, const char *tag, const std::vector<VariableId> &variables )
{
    out << tag << ' ' << variables.size();
    for ( VariableId v : variables )
        out << ' ' << v;
    out << '\n';
}

} // namespace

void writeQuery( std::ostream &out, const Query &query )
{
    out << "MQ1\n";
    out << "vars " << query.numVariables() << '\n';
    if ( !query.inputVariables.empty() )
        writeList( out, "input", query.inputVariables );
    if ( !query.outputVariables.empty() )
        writeList( out, "output", query.outputVariables );

    for ( VariableId v = 0; v < query.numVariables(); ++v )
    {
        double lo = query.bounds.lower( v );
        double hi = query.bounds.upper( v );
        if ( lo != -kInfinity || hi != kInfinity )
            out << "bound " << v << ' ' << formatDouble( lo ) << ' ' << formatDouble( hi ) << '\n';
    }

    for ( const Equation &e : query.equations )
    {
        out << "eq " << relationToken( e.relation ) << ' ' << formatDouble( e.rhs - e.lhs.constant() ) << ' '
            << e.lhs.terms().size();
        for ( const auto &[variable, coefficient] : e.lhs.terms() )
            out << ' ' << formatDouble( coefficient ) << ' ' << variable;
        out << '\n';
    }

    for ( const PLConstraint &c : query.constraints )
    {
        if ( c.kind != PLKind::Disjunction && c.normalized )
            throw UsageError( "cannot write normalized constraint " + std::to_string( c.id ) );
        switch ( c.kind )
        {
        case PLKind::Relu:
        case PLKind::Abs:
        case PLKind::Sign:
            out << kindName( c.kind ) << ' ' << c.f << ' ' << c.b << '\n';
            break;
        case PLKind::LeakyRelu:
            out << "leaky " << c.f << ' ' << c.b << ' ' << formatDouble( c.alpha ) << '\n';
            break;
        case PLKind::Max:
            out << "max " << c.f << ' ' << c.inputs.size();
            for ( VariableId x : c.inputs )
                out << ' ' << x;
            out << '\n';
            break;
        case PLKind::Disjunction:
            out << "disj " << c.disjuncts.size() << '\n';
            for ( const Disjunct &d : c.disjuncts )
            {
                out << "case " << d.size();
                for ( const DisjunctBound &b : d )
                    out << ' ' << b.variable << ' ' << formatDouble( b.lower ) << ' ' << formatDouble( b.upper );
                out << '\n';
            }
            break;
        }
    }
}

std::string writeQuery( const Query &query )
{
    std::ostringstream out;
    writeQuery( out, query );
    return out.str();
}

namespace {

class QueryReader
{
public:
    explicit QueryReader( std::istream &in )
        : _in( in )
    {
    }

    Query read()
    {
        if ( !next() || _tokens.size() != 1 || _tokens[0] != "MQ1" )
            fail( "expected header 'MQ1'" );
        if ( !next() || _tokens[0] != "vars" || _tokens.size() != 2 )
            fail( "expected 'vars <n>'" );
        unsigned n = count( _tokens[1] );
        for ( unsigned i = 0; i < n; ++i )
            _query.addVariable();

        bool sawInput = false, sawOutput = false;
        while ( next() )
        {
            const std::string_view tag = _tokens[0];
            if ( tag == "input" || tag == "output" )
            {
                bool &seen = tag == "input" ? sawInput : sawOutput;
                if ( seen )
                    fail( "duplicate '" + std::string( tag ) + "' record" );
                seen = true;
                ( tag == "input" ? _query.inputVariables : _query.outputVariables ) = variableList( 1 );
                expectEnd( 2 + ( tag == "input" ? _query.inputVariables : _query.outputVariables ).size() );
            }
            else if ( tag == "bound" )
            {
                expectEnd( 4 );
                VariableId v = variable( _tokens[1] );
                _query.bounds.setLower( v, number( _tokens[2] ) );
                _query.bounds.setUpper( v, number( _tokens[3] ) );
            }
            else if ( tag == "eq" )
                readEquation();
            else if ( tag == "relu" || tag == "abs" || tag == "sign" )
            {
                expectEnd( 3 );
                VariableId f = variable( _tokens[1] );
                VariableId b = variable( _tokens[2] );
                _query.addConstraint( tag == "relu"  ? PLConstraint::relu( f, b )
                                      : tag == "abs" ? PLConstraint::abs( f, b )
                                                     : PLConstraint::sign( f, b ) );
            }
            else if ( tag == "leaky" )
            {
                expectEnd( 4 );
                double alpha = number( _tokens[3] );
                if ( !( alpha > 0 && alpha < 1 ) )
                    fail( "leaky slope must lie in (0, 1)" );
                _query.addConstraint( PLConstraint::leakyRelu( variable( _tokens[1] ), variable( _tokens[2] ), alpha ) );
            }
            else if ( tag == "max" )
            {
                if ( _tokens.size() < 3 )
                    fail( "expected 'max <f> <k> <x...>'" );
                VariableId f = variable( _tokens[1] );
                std::vector<VariableId> inputs = variableList( 2 );
                expectEnd( 3 + inputs.size() );
                if ( inputs.empty() )
                    fail( "max needs at least one input" );
                _query.addConstraint( PLConstraint::max( f, std::move( inputs ) ) );
            }
            else if ( tag == "disj" )
                readDisjunction();
            else
                fail( "unknown record '" + std::string( tag ) + "'" );
        }
        return std::move( _query );
    }

private:
    bool next()
    {
        while ( std::getline( _in, _text ) )
        {
            ++_line;
            _tokens = splitWhitespace( _text );
            if ( !_tokens.empty() && _tokens[0].front() != '#' )
                return true;
        }
        return false;
    }

    [[noreturn]] void fail( const std::string &message ) const
    {
        throw ParseError( message, _line );
    }

    void expectEnd( size_t size ) const
    {
        if ( _tokens.size() != size )
            fail( "'" + std::string( _tokens[0] ) + "' record has " + std::to_string( _tokens.size() ) +
                  " tokens, expected " + std::to_string( size ) );
    }

    const std::string_view &token( size_t i ) const
    {
        if ( i >= _tokens.size() )
            fail( "'" + std::string( _tokens[0] ) + "' record is truncated" );
        return _tokens[i];
    }

    unsigned count( std::string_view t ) const
    {
        auto value = parseUnsigned( t );
        if ( !value )
            fail( "expected a count, got '" + std::string( t ) + "'" );
        return *value;
    }

    double number( std::string_view t ) const
    {
        auto value = parseDouble( t );
        if ( !value )
            fail( "expected a number, got '" + std::string( t ) + "'" );
        return *value;
    }

    VariableId variable( std::string_view t ) const
    {
        unsigned v = count( t );
        if ( v >= _query.numVariables() )
            fail( "variable index " + std::to_string( v ) + " out of range (vars " +
                  std::to_string( _query.numVariables() ) + ")" );
        return v;
    }

    std::vector<VariableId> variableList( size_t countAt ) const
    {
        unsigned k = count( token( countAt ) );
        std::vector<VariableId> result;
        for ( unsigned i = 0; i < k; ++i )
            result.push_back( variable( token( countAt + 1 + i ) ) );
        return result;
    }

    void readEquation()
    {
        Equation e;
        std::string_view relation = token( 1 );
        if ( relation == "=" )
            e.relation = Relation::Eq;
        else if ( relation == "<=" )
            e.relation = Relation::Le;
        else if ( relation == ">=" )
            e.relation = Relation::Ge;
        else
            fail( "unknown relation '" + std::string( relation ) + "'" );
        e.rhs = number( token( 2 ) );
        unsigned k = count( token( 3 ) );
        expectEnd( 4 + 2 * static_cast<size_t>( k ) );
        for ( unsigned i = 0; i < k; ++i )
        {
            VariableId v = variable( _tokens[5 + 2 * i] );
            if ( e.lhs.coefficient( v ) != 0 )
                fail( "variable " + std::to_string( v ) + " appears twice in one equation" );
            e.addTerm( v, number( _tokens[4 + 2 * i] ) );
        }
        _query.addEquation( std::move( e ) );
    }

    void readDisjunction()
    {
        expectEnd( 2 );
        unsigned m = count( _tokens[1] );
        if ( m == 0 )
            fail( "disjunction needs at least one case" );
        std::vector<Disjunct> disjuncts;
        for ( unsigned i = 0; i < m; ++i )
        {
            if ( !next() || _tokens[0] != "case" )
                fail( "expected 'case' line " + std::to_string( i ) + " of " + std::to_string( m ) );
            unsigned k = count( token( 1 ) );
            expectEnd( 2 + 3 * static_cast<size_t>( k ) );
            Disjunct d;
            for ( unsigned j = 0; j < k; ++j )
                d.push_back( { variable( _tokens[2 + 3 * j] ), number( _tokens[3 + 3 * j] ),
                               number( _tokens[4 + 3 * j] ) } );
            disjuncts.push_back( std::move( d ) );
        }
        _query.addConstraint( PLConstraint::disjunction( std::move( disjuncts ) ) );
    }

    std::istream &_in;
    std::string _text;
    std::vector<std::string_view> _tokens;
    unsigned _line = 0;
    Query _query;
};

} // namespace

Query parseQuery( std::istream &in )
{
    return QueryReader( in ).read();
}

Query parseQuery( const std::string &text )
{
    std::istringstream in( text );
    return parseQuery( in );
}

Query readQueryFile( const std::string &path )
{
    return parseQuery( readTextFile( path ) );
}

std::optional<SolveStatus> parseStatus( const std::string &name )
{
    for ( SolveStatus s : { SolveStatus::Sat, SolveStatus::Unsat, SolveStatus::Timeout, SolveStatus::Unknown } )
        if ( name == statusName( s ) )
            return s;
    return std::nullopt;
}

void writeResult( std::ostream &out, SolveStatus status, const std::vector<double> &assignment )
{
    out << statusName( status ) << '\n';
    if ( status == SolveStatus::Sat )
        for ( size_t i = 0; i < assignment.size(); ++i )
            out << "x " << i << ' ' << formatDouble( assignment[i] ) << '\n';
}

ResultFile parseResult( const std::string &text )
{
    std::istringstream in( text );
    std::string line;
    unsigned number = 0;
    ResultFile result;
    bool sawStatus = false;
    while ( std::getline( in, line ) )
    {
        ++number;
        auto tokens = splitWhitespace( line );
        if ( tokens.empty() )
            continue;
        if ( !sawStatus )
        {
            auto status = tokens.size() == 1 ? parseStatus( std::string( tokens[0] ) ) : std::nullopt;
            if ( !status )
                throw ParseError( "expected a status line", number );
            result.status = *status;
            sawStatus = true;
            continue;
        }
        auto index = tokens.size() == 3 && tokens[0] == "x" ? parseUnsigned( tokens[1] ) : std::nullopt;
        auto value = index ? parseDouble( tokens[2] ) : std::nullopt;
        if ( !value || *index != result.values.size() )
            throw ParseError( "expected 'x " + std::to_string( result.values.size() ) + " <value>'", number );
        result.values.push_back( *value );
    }
    if ( !sawStatus )
        throw ParseError( "empty result" );
    return result;
}

} // namespace nnv
