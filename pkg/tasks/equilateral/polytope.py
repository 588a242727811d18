import logging
import os

from modules.equilateral.polytope import load_polytope, petty_certificate
from tasks.equilateral.base import EXIT_OK, EXIT_VERIFICATION, EquilateralTask

logger = logging.getLogger(__name__)


class PolytopeTask(EquilateralTask):
    command = 'polytope'

    def run(self):
        P = load_polytope(self.config.input)
        result = petty_certificate(P, enum_budget=self.config.enum_budget)
        cert = result.certificate
        cert.source = dict(cert.source, petty=result.petty, guaranteed=result.guaranteed)
        path, report = self.write_certificate(cert)
        if not report.ok:
            return EXIT_VERIFICATION
        # the same set in cube-section coordinates
        section_path = f'{os.path.splitext(path)[0]}.section.json'
        _, section_report = self.write_certificate(result.section_certificate, path=section_path)
        if not section_report.ok:
            return EXIT_VERIFICATION
        logger.info(f'| d = {P.d}, f = {P.f}: {cert.size} points, petty = {result.petty}, '
                    f'guaranteed = {result.guaranteed}')
        return EXIT_OK
