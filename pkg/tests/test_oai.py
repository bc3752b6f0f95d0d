"""OAI-PMH provider: verbs, sets from the index, dynamic DC payloads."""

import re
import xml.etree.ElementTree as ET

import pytest

from foxrepo.oai import OaiConfig, OaiSet, handle_oai

NS = {"oai": "http://www.openarchives.org/OAI/2.0/"}

CONFIG = OaiConfig(
    base_url="http://testserver/fedora/oai",
    sets=(OaiSet(set_spec="demo:10", set_name="Demo collection", collection_pid="demo:10"),),
)


def oai(client, **params):
    response = client.get("/fedora/oai", params=params)
    assert response.status_code == 200
    assert response.headers["content-type"].startswith("text/xml")
    return ET.fromstring(response.content)


def error_of(root):
    errors = root.findall("oai:error", NS)
    assert len(errors) == 1
    return errors[0].attrib["code"]


def identifiers_of(root):
    return [e.text for e in root.findall(".//oai:header/oai:identifier", NS)]


class TestProtocol:
    def test_identify(self, client, fixture_repo):
        root = oai(client, verb="Identify")
        identify = root.find("oai:Identify", NS)
        assert identify is not None
        assert identify.findtext("oai:protocolVersion", namespaces=NS) == "2.0"
        assert identify.findtext("oai:baseURL", namespaces=NS) == "http://testserver/fedora/oai"
        assert identify.findtext("oai:earliestDatestamp", namespaces=NS) == "2004-12-01T00:00:00Z"
        assert identify.findtext("oai:granularity", namespaces=NS) == "YYYY-MM-DDThh:mm:ssZ"
        assert root.findtext("oai:responseDate", namespaces=NS)

    def test_request_element_echoes_arguments(self, client):
        root = oai(client, verb="GetRecord", identifier="oai:example.org:demo:11", metadataPrefix="oai_dc")
        request = root.find("oai:request", NS)
        assert request.attrib["verb"] == "GetRecord"
        assert request.attrib["identifier"] == "oai:example.org:demo:11"
        assert request.text == "http://testserver/fedora/oai"

    def test_list_sets(self, client):
        root = oai(client, verb="ListSets")
        sets = root.findall(".//oai:set", NS)
        assert [(s.findtext("oai:setSpec", namespaces=NS), s.findtext("oai:setName", namespaces=NS)) for s in sets] == [
            ("demo:10", "Demo collection")
        ]

    def test_bad_verb(self, client):
        assert error_of(oai(client, verb="Destroy")) == "badVerb"
        assert error_of(oai(client)) == "badVerb"

    def test_bad_verb_request_element_carries_no_arguments(self, client):
        root = oai(client, verb="Destroy", extra="x")
        assert root.find("oai:request", NS).attrib == {}

    def test_illegal_argument(self, client):
        assert error_of(oai(client, verb="Identify", extra="1")) == "badArgument"

    def test_missing_metadata_prefix(self, client):
        assert error_of(oai(client, verb="ListIdentifiers")) == "badArgument"

    def test_unsupported_metadata_prefix(self, client):
        root = oai(client, verb="ListRecords", metadataPrefix="marc21")
        assert error_of(root) == "cannotDisseminateFormat"

    def test_bad_from_timestamp(self, client):
        root = oai(
            client, verb="ListIdentifiers", metadataPrefix="oai_dc", **{"from": "notatime"}
        )
        assert error_of(root) == "badArgument"


class TestListing:
    def test_list_identifiers_all(self, client, fixture_repo):
        root = oai(client, verb="ListIdentifiers", metadataPrefix="oai_dc")
        expected = [f"oai:example.org:{pid}" for pid in sorted(fixture_repo.objects)]
        assert identifiers_of(root) == expected

    def test_set_membership_comes_from_index(self, client):
        root = oai(client, verb="ListIdentifiers", metadataPrefix="oai_dc", set="demo:10")
        assert identifiers_of(root) == ["oai:example.org:demo:11", "oai:example.org:demo:12"]
        specs = {e.text for e in root.findall(".//oai:header/oai:setSpec", NS)}
        assert specs == {"demo:10"}

    def test_has_member_inverse_also_selects(self, client, fixture_repo):
        rels = (
            b'<rdf:RDF xmlns:rdf="http://www.w3.org/1999/02/22-rdf-syntax-ns#" '
            b'xmlns:rel="info:fedora/fedora-system:def:relations-external#">'
            b'<rdf:Description rdf:about="info:fedora/demo:10">'
            b'<rel:hasMember rdf:resource="info:fedora/BDEF:2"/>'
            b"</rdf:Description></rdf:RDF>"
        )
        fixture_repo.add_datastream(
            "demo:10", "RELS-EXT", "X", "text/xml", "fedoraAdmin", content=rels
        )
        root = oai(client, verb="ListIdentifiers", metadataPrefix="oai_dc", set="demo:10")
        assert identifiers_of(root) == [
            "oai:example.org:BDEF:2",
            "oai:example.org:demo:11",
            "oai:example.org:demo:12",
        ]

    def test_unknown_set(self, client):
        root = oai(client, verb="ListIdentifiers", metadataPrefix="oai_dc", set="nope")
        assert error_of(root) == "badArgument"

    def test_from_until_window(self, client):
        # bounds are inclusive: demo:10 sits on from, demo:11 sits on until
        root = oai(
            client,
            verb="ListIdentifiers",
            metadataPrefix="oai_dc",
            **{"from": "2004-12-05T00:00:00Z", "until": "2004-12-10T00:21:57Z"},
        )
        assert identifiers_of(root) == ["oai:example.org:demo:10", "oai:example.org:demo:11"]

    def test_no_records_match(self, client):
        root = oai(
            client,
            verb="ListIdentifiers",
            metadataPrefix="oai_dc",
            until="1999-01-01T00:00:00Z",
        )
        assert error_of(root) == "noRecordsMatch"

    def test_datestamp_is_dc_representation_modified(self, client):
        root = oai(client, verb="GetRecord", identifier="oai:example.org:demo:11", metadataPrefix="oai_dc")
        assert root.findtext(".//oai:header/oai:datestamp", namespaces=NS) == "2004-12-10T00:21:57Z"

    def test_resumption_paging_covers_everything(self, fixture_repo):
        config = OaiConfig(base_url="http://x/oai", sets=CONFIG.sets, page_size=2)
        seen = []
        args = {"verb": "ListIdentifiers", "metadataPrefix": "oai_dc"}
        for _hop in range(10):
            root = ET.fromstring(handle_oai(fixture_repo, args, config).encode())
            assert root.find("oai:error", NS) is None
            page = identifiers_of(root)
            assert len(page) <= 2
            seen.extend(page)
            token = root.findtext(".//oai:resumptionToken", namespaces=NS)
            if token is None:
                break
            args = {"verb": "ListIdentifiers", "resumptionToken": token}
        assert seen == [f"oai:example.org:{pid}" for pid in sorted(fixture_repo.objects)]

    def test_resumption_token_is_exclusive(self, fixture_repo):
        out = handle_oai(
            fixture_repo,
            {"verb": "ListIdentifiers", "resumptionToken": "|||0", "metadataPrefix": "oai_dc"},
            CONFIG,
        )
        assert error_of(ET.fromstring(out.encode())) == "badArgument"

    @pytest.mark.parametrize("token", ["zzz", "a|b", "|||notanumber", "|||99"])
    def test_bad_resumption_tokens(self, fixture_repo, token):
        out = handle_oai(
            fixture_repo, {"verb": "ListIdentifiers", "resumptionToken": token}, CONFIG
        )
        assert error_of(ET.fromstring(out.encode())) == "badArgument"


class TestRecords:
    def test_get_record_static_dc_via_dissemination(self, client):
        root = oai(client, verb="GetRecord", identifier="oai:example.org:demo:11", metadataPrefix="oai_dc")
        record = root.find(".//oai:record", NS)
        assert record is not None
        metadata = ET.tostring(record.find("oai:metadata", NS), encoding="unicode")
        assert "Image of UVA Pavilion - Drawing" in metadata

    def test_dynamic_metadata_bypasses_stored_dc(self, client, fixture_repo):
        # demo:12 has no authored DC; its getDC disseminator reads DESC instead
        # of the record synthesized at ingest time.
        synthesized = fixture_repo.get_datastream_content("demo:12", "DC")[1]
        assert b"Image Object" in synthesized
        root = oai(client, verb="GetRecord", identifier="oai:example.org:demo:12", metadataPrefix="oai_dc")
        metadata = ET.tostring(root.find(".//oai:metadata", NS), encoding="unicode")
        assert "Image of UVA Rotunda - Photograph" in metadata
        assert "Image Object" not in metadata

    def test_list_records_in_set(self, client):
        root = oai(client, verb="ListRecords", metadataPrefix="oai_dc", set="demo:10")
        records = root.findall(".//oai:record", NS)
        assert len(records) == 2
        text = ET.tostring(root, encoding="unicode")
        assert "Image of UVA Pavilion - Drawing" in text
        assert "Image of UVA Rotunda - Photograph" in text

    def test_plain_dc_for_objects_without_disseminators(self, client):
        root = oai(client, verb="GetRecord", identifier="oai:example.org:demo:10", metadataPrefix="oai_dc")
        metadata = ET.tostring(root.find(".//oai:metadata", NS), encoding="unicode")
        assert "University of Virginia Image Collection" in metadata

    def test_get_record_unknown_identifier(self, client):
        root = oai(client, verb="GetRecord", identifier="oai:example.org:ghost:1", metadataPrefix="oai_dc")
        assert error_of(root) == "idDoesNotExist"

    def test_get_record_foreign_domain(self, client):
        root = oai(client, verb="GetRecord", identifier="oai:elsewhere.org:demo:11", metadataPrefix="oai_dc")
        assert error_of(root) == "idDoesNotExist"

    def test_get_record_requires_identifier(self, client):
        root = oai(client, verb="GetRecord", metadataPrefix="oai_dc")
        assert error_of(root) == "badArgument"

    def test_protocol_errors_are_http_200(self, client):
        response = client.get("/fedora/oai", params={"verb": "Destroy"})
        assert response.status_code == 200
        assert b'<error code="badVerb">' in response.content

    def test_response_shape_is_wellformed_and_stamped(self, client):
        response = client.get(
            "/fedora/oai",
            params={"verb": "GetRecord", "identifier": "oai:example.org:demo:11", "metadataPrefix": "oai_dc"},
        )
        assert response.content.startswith(b'<?xml version="1.0" encoding="UTF-8"?>')
        root = ET.fromstring(response.content)
        stamp = root.findtext("oai:responseDate", namespaces=NS)
        assert re.fullmatch(r"\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}Z", stamp)
