"""Bundled demonstration objects.

`load_fixtures` ingests a small, self-consistent graph: two behavior
definitions with their mechanisms, a collection object, and two image
objects that are members of it. The image objects carry Dublin Core
disseminations through bdef:OAI/getDC, one from a DC datastream and one
from a differently named descriptive record, so the harvesting path is
exercised both statically and dynamically.

`service_base` is the root URL of the external service host that the
image bindings point at (the zoom-and-pan service plus the thumbnail
files). The loader is idempotent: objects whose PID is already present
are left untouched.
"""

from __future__ import annotations

from .storage import Repository

DEFAULT_SERVICE_BASE = "http://127.0.0.1:8200"

FIXTURE_PIDS = ("BDEF:2", "bdef:OAI", "BMECH:3", "bmech:OAI", "demo:10", "demo:11", "demo:12")

HIGH_CONTENT = {
    "demo:11:HIGH:HIGH.0": b"demo:11 HIGH version 0: pavilion drawing, first scan\n",
    "demo:11:HIGH:HIGH.1": b"demo:11 HIGH version 1: pavilion drawing, rescanned\n",
    "demo:11:HIGH:HIGH.2": b"demo:11 HIGH version 2: pavilion drawing, color corrected\n",
    "demo:12:HIGH:HIGH.0": b"demo:12 HIGH version 0: rotunda photograph\n",
}


def _bdef_2() -> bytes:
    return """<?xml version="1.0" encoding="UTF-8"?>
<foxml:digitalObject PID="BDEF:2"
  xmlns:foxml="info:fedora/fedora-system:def/foxml#">
  <foxml:objectProperties>
    <foxml:property NAME="http://www.w3.org/1999/02/22-rdf-syntax-ns#type" VALUE="FedoraObject"/>
    <foxml:property NAME="info:fedora/fedora-system:def/model#state" VALUE="A"/>
    <foxml:property NAME="info:fedora/fedora-system:def/model#label" VALUE="UVA Simple Image Behavior Definition"/>
    <foxml:property NAME="info:fedora/fedora-system:def/model#createdDate" VALUE="2004-12-01T00:00:00Z"/>
    <foxml:property NAME="info:fedora/fedora-system:def/model#contentModel" VALUE="BDEF"/>
  </foxml:objectProperties>
  <foxml:datastream ID="METHODMAP" CONTROL_GROUP="X" MIMETYPE="text/xml" STATE="A" VERSIONABLE="true">
    <foxml:datastreamVersion ID="METHODMAP.0" LABEL="Abstract Method Map" CREATED="2004-12-01T00:00:00Z">
      <foxml:xmlContent>
        <methodMap name="UVA Simple Image Behaviors">
          <method name="ZPAN">
            <param name="zoom" required="false" default="1"/>
            <param name="pan" required="false" default="0"/>
          </method>
        </methodMap>
      </foxml:xmlContent>
    </foxml:datastreamVersion>
  </foxml:datastream>
</foxml:digitalObject>
""".encode()


def _bdef_oai() -> bytes:
    return """<?xml version="1.0" encoding="UTF-8"?>
<foxml:digitalObject PID="bdef:OAI"
  xmlns:foxml="info:fedora/fedora-system:def/foxml#">
  <foxml:objectProperties>
    <foxml:property NAME="http://www.w3.org/1999/02/22-rdf-syntax-ns#type" VALUE="FedoraObject"/>
    <foxml:property NAME="info:fedora/fedora-system:def/model#state" VALUE="A"/>
    <foxml:property NAME="info:fedora/fedora-system:def/model#label" VALUE="OAI Metadata Behavior Definition"/>
    <foxml:property NAME="info:fedora/fedora-system:def/model#createdDate" VALUE="2004-12-01T00:00:00Z"/>
    <foxml:property NAME="info:fedora/fedora-system:def/model#contentModel" VALUE="BDEF"/>
  </foxml:objectProperties>
  <foxml:datastream ID="METHODMAP" CONTROL_GROUP="X" MIMETYPE="text/xml" STATE="A" VERSIONABLE="true">
    <foxml:datastreamVersion ID="METHODMAP.0" LABEL="Abstract Method Map" CREATED="2004-12-01T00:00:00Z">
      <foxml:xmlContent>
        <methodMap name="OAI Metadata Behaviors">
          <method name="getDC"/>
        </methodMap>
      </foxml:xmlContent>
    </foxml:datastreamVersion>
  </foxml:datastream>
</foxml:digitalObject>
""".encode()


def _bmech_3(service_base: str) -> bytes:
    return f"""<?xml version="1.0" encoding="UTF-8"?>
<foxml:digitalObject PID="BMECH:3"
  xmlns:foxml="info:fedora/fedora-system:def/foxml#">
  <foxml:objectProperties>
    <foxml:property NAME="http://www.w3.org/1999/02/22-rdf-syntax-ns#type" VALUE="FedoraObject"/>
    <foxml:property NAME="info:fedora/fedora-system:def/model#state" VALUE="A"/>
    <foxml:property NAME="info:fedora/fedora-system:def/model#label" VALUE="UVA Simple Image Behavior Mechanism"/>
    <foxml:property NAME="info:fedora/fedora-system:def/model#createdDate" VALUE="2004-12-01T00:00:00Z"/>
    <foxml:property NAME="info:fedora/fedora-system:def/model#contentModel" VALUE="BMECH"/>
  </foxml:objectProperties>
  <foxml:datastream ID="SERVICEBINDINGS" CONTROL_GROUP="X" MIMETYPE="text/xml" STATE="A" VERSIONABLE="true">
    <foxml:datastreamVersion ID="SERVICEBINDINGS.0" LABEL="Service Binding Table" CREATED="2004-12-01T00:00:00Z">
      <foxml:xmlContent>
        <serviceBindings bdef="BDEF:2">
          <binding method="ZPAN" url="{service_base}/zpan?src={{HIGHRES_IMG}}&amp;zoom={{zoom}}&amp;pan={{pan}}" mime="text/html">
            <input key="HIGHRES_IMG"/>
          </binding>
        </serviceBindings>
      </foxml:xmlContent>
    </foxml:datastreamVersion>
  </foxml:datastream>
</foxml:digitalObject>
""".encode()


def _bmech_oai() -> bytes:
    return """<?xml version="1.0" encoding="UTF-8"?>
<foxml:digitalObject PID="bmech:OAI"
  xmlns:foxml="info:fedora/fedora-system:def/foxml#">
  <foxml:objectProperties>
    <foxml:property NAME="http://www.w3.org/1999/02/22-rdf-syntax-ns#type" VALUE="FedoraObject"/>
    <foxml:property NAME="info:fedora/fedora-system:def/model#state" VALUE="A"/>
    <foxml:property NAME="info:fedora/fedora-system:def/model#label" VALUE="OAI Metadata Behavior Mechanism"/>
    <foxml:property NAME="info:fedora/fedora-system:def/model#createdDate" VALUE="2004-12-01T00:00:00Z"/>
    <foxml:property NAME="info:fedora/fedora-system:def/model#contentModel" VALUE="BMECH"/>
  </foxml:objectProperties>
  <foxml:datastream ID="SERVICEBINDINGS" CONTROL_GROUP="X" MIMETYPE="text/xml" STATE="A" VERSIONABLE="true">
    <foxml:datastreamVersion ID="SERVICEBINDINGS.0" LABEL="Service Binding Table" CREATED="2004-12-01T00:00:00Z">
      <foxml:xmlContent>
        <serviceBindings bdef="bdef:OAI">
          <binding method="getDC" url="{DC_SRC}" mime="text/xml">
            <input key="DC_SRC"/>
          </binding>
        </serviceBindings>
      </foxml:xmlContent>
    </foxml:datastreamVersion>
  </foxml:datastream>
</foxml:digitalObject>
""".encode()


def _demo_10() -> bytes:
    return """<?xml version="1.0" encoding="UTF-8"?>
<foxml:digitalObject PID="demo:10"
  xmlns:foxml="info:fedora/fedora-system:def/foxml#">
  <foxml:objectProperties>
    <foxml:property NAME="http://www.w3.org/1999/02/22-rdf-syntax-ns#type" VALUE="FedoraObject"/>
    <foxml:property NAME="info:fedora/fedora-system:def/model#state" VALUE="A"/>
    <foxml:property NAME="info:fedora/fedora-system:def/model#label" VALUE="UVA Image Collection"/>
    <foxml:property NAME="info:fedora/fedora-system:def/model#createdDate" VALUE="2004-12-05T00:00:00Z"/>
    <foxml:property NAME="info:fedora/fedora-system:def/model#contentModel" VALUE="UVA_COLLECTION"/>
  </foxml:objectProperties>
  <foxml:datastream ID="DC" CONTROL_GROUP="X" MIMETYPE="text/xml" STATE="A" VERSIONABLE="true">
    <foxml:datastreamVersion ID="DC.0" LABEL="Dublin Core Record" CREATED="2004-12-05T00:00:00Z">
      <foxml:xmlContent>
        <oai_dc:dc xmlns:oai_dc="http://www.openarchives.org/OAI/2.0/oai_dc"
            xmlns:dc="http://purl.org/dc/elements/1.1/">
            <dc:title>University of Virginia Image Collection</dc:title>
            <dc:identifier>demo:10</dc:identifier>
        </oai_dc:dc>
      </foxml:xmlContent>
    </foxml:datastreamVersion>
  </foxml:datastream>
</foxml:digitalObject>
""".encode()


def _demo_11(service_base: str) -> bytes:
    return f"""<?xml version="1.0" encoding="UTF-8"?>
<foxml:digitalObject PID="demo:11"
  xmlns:foxml="info:fedora/fedora-system:def/foxml#"
  xmlns:xsi="http://www.w3.org/2001/XMLSchema-instance"
  xsi:schemaLocation="info:fedora/fedora-system:def/foxml# http://www.fedora.info/definitions/1/0/foxml1-0.xsd">
  <foxml:objectProperties>
    <foxml:property NAME="http://www.w3.org/1999/02/22-rdf-syntax-ns#type" VALUE="FedoraObject"/>
    <foxml:property NAME="info:fedora/fedora-system:def/model#state" VALUE="A"/>
    <foxml:property NAME="info:fedora/fedora-system:def/model#label" VALUE="Image Object – UVA Pavilion"/>
    <foxml:property NAME="info:fedora/fedora-system:def/model#createdDate" VALUE="2004-12-10T00:21:57Z"/>
    <foxml:property NAME="info:fedora/fedora-system:def/view#lastModifiedDate" VALUE="2004-12-23T00:20:00Z"/>
    <foxml:property NAME="info:fedora/fedora-system:def/model#contentModel" VALUE="UVA_STD_IMG"/>
  </foxml:objectProperties>
  <foxml:datastream ID="THUMB" CONTROL_GROUP="E" MIMETYPE="image/jpg" STATE="A" VERSIONABLE="true">
    <foxml:datastreamVersion ID="THUMB.0" LABEL="Preview Pavilion III" CREATED="2004-12-10T00:21:57Z">
      <foxml:contentLocation TYPE="URL" REF="{service_base}/images/iva/archerd05small.jpg"/>
    </foxml:datastreamVersion>
  </foxml:datastream>
  <foxml:datastream ID="HIGH" CONTROL_GROUP="M" MIMETYPE="image/jpeg" STATE="A" VERSIONABLE="true">
    <foxml:datastreamVersion ID="HIGH.0" LABEL="Drawing Pavilion III" CREATED="2004-12-10T00:21:57Z">
      <foxml:contentLocation TYPE="INTERNAL_ID" REF="demo:11:HIGH:HIGH.0"/>
    </foxml:datastreamVersion>
    <foxml:datastreamVersion ID="HIGH.1" LABEL="Drawing Pavilion III" CREATED="2004-12-12T00:22:00Z">
      <foxml:contentLocation TYPE="INTERNAL_ID" REF="demo:11:HIGH:HIGH.1"/>
    </foxml:datastreamVersion>
    <foxml:datastreamVersion ID="HIGH.2" LABEL="Drawing Pavilion III" CREATED="2004-12-23T00:20:00Z">
      <foxml:contentLocation TYPE="INTERNAL_ID" REF="demo:11:HIGH:HIGH.2"/>
    </foxml:datastreamVersion>
  </foxml:datastream>
  <foxml:datastream ID="DC" CONTROL_GROUP="X" MIMETYPE="text/xml" STATE="A" VERSIONABLE="true">
    <foxml:datastreamVersion ID="DC.0" LABEL="Dublin Core Record" CREATED="2004-12-10T00:21:57Z">
      <foxml:xmlContent>
        <oai_dc:dc xmlns:oai_dc="http://www.openarchives.org/OAI/2.0/oai_dc"
            xmlns:dc="http://purl.org/dc/elements/1.1/">
            <dc:title>Image of UVA Pavilion - Drawing</dc:title>
            <dc:subject>Architectural drawings</dc:subject>
            <dc:publisher>University of Virginia</dc:publisher>
            <dc:identifier>demo:11</dc:identifier>
        </oai_dc:dc>
      </foxml:xmlContent>
    </foxml:datastreamVersion>
  </foxml:datastream>
  <foxml:datastream ID="RELS-EXT" CONTROL_GROUP="X" MIMETYPE="text/xml" STATE="A" VERSIONABLE="true">
    <foxml:datastreamVersion ID="RELS-EXT.0" LABEL="Relationships" CREATED="2004-12-10T00:21:57Z">
      <foxml:xmlContent>
        <rdf:RDF xmlns:rdf="http://www.w3.org/1999/02/22-rdf-syntax-ns#"
            xmlns:fedora="info:fedora/fedora-system:def:relations-external#">
          <rdf:Description rdf:about="info:fedora/demo:11">
            <fedora:isMemberOf rdf:resource="info:fedora/demo:10"/>
          </rdf:Description>
        </rdf:RDF>
      </foxml:xmlContent>
    </foxml:datastreamVersion>
  </foxml:datastream>
  <foxml:datastream ID="AUDIT" CONTROL_GROUP="M" MIMETYPE="text/xml" STATE="A" VERSIONABLE="false">
    <foxml:datastreamVersion ID="AUDIT.0" LABEL="Object Audit Trail" CREATED="2004-12-12T00:22:00Z">
      <foxml:xmlContent>
        <audit:auditTrail xmlns:audit="info:fedora/def:audit/">
          <audit:record ID="AUDREC1">
            <audit:process type="Fedora API-M"/>
            <audit:action>modifyDatastreamByRef</audit:action>
            <audit:componentID>HIGH</audit:componentID>
            <audit:responsibility>fedoraAdmin</audit:responsibility>
            <audit:date>2004-12-12T00:22:00Z</audit:date>
            <audit:justification></audit:justification>
          </audit:record>
          <audit:record ID="AUDREC2">
            <audit:process type="Fedora API-M"/>
            <audit:action>modifyDatastreamByRef</audit:action>
            <audit:componentID>HIGH</audit:componentID>
            <audit:responsibility>fedoraAdmin</audit:responsibility>
            <audit:date>2004-12-23T00:20:00Z</audit:date>
            <audit:justification></audit:justification>
          </audit:record>
        </audit:auditTrail>
      </foxml:xmlContent>
    </foxml:datastreamVersion>
  </foxml:datastream>
  <foxml:disseminator ID="DISS1" BDEF_CONTRACT_PID="BDEF:2" STATE="A" VERSIONABLE="true">
    <foxml:disseminatorVersion ID="DISS1.0" BMECH_SERVICE_PID="BMECH:3" LABEL="UVA Simple Image Behaviors" CREATED="2004-12-10T00:21:57Z">
      <foxml:serviceInputMap>
        <foxml:datastreamBinding KEY="HIGHRES_IMG" DATASTREAM_ID="HIGH" LABEL="Input Image"/>
      </foxml:serviceInputMap>
    </foxml:disseminatorVersion>
  </foxml:disseminator>
  <foxml:disseminator ID="DISS2" BDEF_CONTRACT_PID="bdef:OAI" STATE="A" VERSIONABLE="true">
    <foxml:disseminatorVersion ID="DISS2.0" BMECH_SERVICE_PID="bmech:OAI" LABEL="OAI Dublin Core Dissemination" CREATED="2004-12-10T00:21:57Z">
      <foxml:serviceInputMap>
        <foxml:datastreamBinding KEY="DC_SRC" DATASTREAM_ID="DC" LABEL="Dublin Core Source"/>
      </foxml:serviceInputMap>
    </foxml:disseminatorVersion>
  </foxml:disseminator>
</foxml:digitalObject>
""".encode()


def _demo_12(service_base: str) -> bytes:
    return f"""<?xml version="1.0" encoding="UTF-8"?>
<foxml:digitalObject PID="demo:12"
  xmlns:foxml="info:fedora/fedora-system:def/foxml#">
  <foxml:objectProperties>
    <foxml:property NAME="http://www.w3.org/1999/02/22-rdf-syntax-ns#type" VALUE="FedoraObject"/>
    <foxml:property NAME="info:fedora/fedora-system:def/model#state" VALUE="A"/>
    <foxml:property NAME="info:fedora/fedora-system:def/model#label" VALUE="Image Object – UVA Rotunda"/>
    <foxml:property NAME="info:fedora/fedora-system:def/model#createdDate" VALUE="2004-12-11T00:00:00Z"/>
    <foxml:property NAME="info:fedora/fedora-system:def/model#contentModel" VALUE="UVA_STD_IMG"/>
  </foxml:objectProperties>
  <foxml:datastream ID="DESC" CONTROL_GROUP="X" MIMETYPE="text/xml" STATE="A" VERSIONABLE="true">
    <foxml:datastreamVersion ID="DESC.0" LABEL="Descriptive Metadata" CREATED="2004-12-11T00:00:00Z">
      <foxml:xmlContent>
        <oai_dc:dc xmlns:oai_dc="http://www.openarchives.org/OAI/2.0/oai_dc"
            xmlns:dc="http://purl.org/dc/elements/1.1/">
            <dc:title>Image of UVA Rotunda - Photograph</dc:title>
            <dc:subject>University architecture</dc:subject>
            <dc:publisher>University of Virginia</dc:publisher>
            <dc:identifier>demo:12</dc:identifier>
        </oai_dc:dc>
      </foxml:xmlContent>
    </foxml:datastreamVersion>
  </foxml:datastream>
  <foxml:datastream ID="WEB" CONTROL_GROUP="R" MIMETYPE="image/jpeg" STATE="A" VERSIONABLE="true">
    <foxml:datastreamVersion ID="WEB.0" LABEL="Web Resolution Rotunda" CREATED="2004-12-11T00:00:00Z">
      <foxml:contentLocation TYPE="URL" REF="{service_base}/images/iva/rotundaweb.jpg"/>
    </foxml:datastreamVersion>
  </foxml:datastream>
  <foxml:datastream ID="HIGH" CONTROL_GROUP="M" MIMETYPE="image/jpeg" STATE="A" VERSIONABLE="true">
    <foxml:datastreamVersion ID="HIGH.0" LABEL="Photograph Rotunda" CREATED="2004-12-11T00:00:00Z">
      <foxml:contentLocation TYPE="INTERNAL_ID" REF="demo:12:HIGH:HIGH.0"/>
    </foxml:datastreamVersion>
  </foxml:datastream>
  <foxml:datastream ID="THUMB" CONTROL_GROUP="E" MIMETYPE="image/jpg" STATE="A" VERSIONABLE="true">
    <foxml:datastreamVersion ID="THUMB.0" LABEL="Preview Rotunda" CREATED="2004-12-11T00:00:00Z">
      <foxml:contentLocation TYPE="URL" REF="{service_base}/images/iva/rotundasmall.jpg"/>
    </foxml:datastreamVersion>
  </foxml:datastream>
  <foxml:datastream ID="RELS-EXT" CONTROL_GROUP="X" MIMETYPE="text/xml" STATE="A" VERSIONABLE="true">
    <foxml:datastreamVersion ID="RELS-EXT.0" LABEL="Relationships" CREATED="2004-12-11T00:00:00Z">
      <foxml:xmlContent>
        <rdf:RDF xmlns:rdf="http://www.w3.org/1999/02/22-rdf-syntax-ns#"
            xmlns:fedora="info:fedora/fedora-system:def:relations-external#">
          <rdf:Description rdf:about="info:fedora/demo:12">
            <fedora:isMemberOf rdf:resource="info:fedora/demo:10"/>
          </rdf:Description>
        </rdf:RDF>
      </foxml:xmlContent>
    </foxml:datastreamVersion>
  </foxml:datastream>
  <foxml:disseminator ID="DISS1" BDEF_CONTRACT_PID="BDEF:2" STATE="A" VERSIONABLE="true">
    <foxml:disseminatorVersion ID="DISS1.0" BMECH_SERVICE_PID="BMECH:3" LABEL="UVA Simple Image Behaviors" CREATED="2004-12-11T00:00:00Z">
      <foxml:serviceInputMap>
        <foxml:datastreamBinding KEY="HIGHRES_IMG" DATASTREAM_ID="HIGH" LABEL="Input Image"/>
      </foxml:serviceInputMap>
    </foxml:disseminatorVersion>
  </foxml:disseminator>
  <foxml:disseminator ID="DISS2" BDEF_CONTRACT_PID="bdef:OAI" STATE="A" VERSIONABLE="true">
    <foxml:disseminatorVersion ID="DISS2.0" BMECH_SERVICE_PID="bmech:OAI" LABEL="OAI Dublin Core Dissemination" CREATED="2004-12-11T00:00:00Z">
      <foxml:serviceInputMap>
        <foxml:datastreamBinding KEY="DC_SRC" DATASTREAM_ID="DESC" LABEL="Dublin Core Source"/>
      </foxml:serviceInputMap>
    </foxml:disseminatorVersion>
  </foxml:disseminator>
</foxml:digitalObject>
""".encode()


def fixture_documents(service_base: str = DEFAULT_SERVICE_BASE) -> dict[str, bytes]:
    """FOXML sources keyed by PID, in ingest order."""
    return {
        "BDEF:2": _bdef_2(),
        "bdef:OAI": _bdef_oai(),
        "BMECH:3": _bmech_3(service_base),
        "bmech:OAI": _bmech_oai(),
        "demo:10": _demo_10(),
        "demo:11": _demo_11(service_base),
        "demo:12": _demo_12(service_base),
    }


def load_fixtures(
    repo: Repository,
    service_base: str = DEFAULT_SERVICE_BASE,
    principal: str = "fedoraAdmin",
) -> list[str]:
    """Ingest any fixture objects not already present; returns ingested PIDs."""
    loaded = []
    for pid, xml in fixture_documents(service_base).items():
        if pid in repo.objects:
            continue
        for internal_id, data in HIGH_CONTENT.items():
            if internal_id.startswith(pid + ":"):
                repo.stage_content(internal_id, data)
        repo.ingest(xml, principal)
        loaded.append(pid)
    return loaded
